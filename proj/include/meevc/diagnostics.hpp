/// @file diagnostics.hpp
/// @brief Discrete energy budget, particle mass budget and front tracking.
///
/// Row k of the ledger describes the state after k steps: kinetic energy of
/// u^{k+1/2}, potential energy of phi^k, the viscous rate at k, the settling rate
/// at k-1/2, and their cumulative sums. The energy residual
///   E_res^k = K^{k+1/2} + Ep^k + Ev^k + Es^k - K^{1/2} - Ep^0
/// equals (dt/2)(<phi^k e_g, u^{k+1/2}> - <phi^0 e_g, u^{1/2}>) up to solver
/// round-off, which is the lag between velocity and concentration levels.

#pragma once

#include <array>
#include <string>
#include <vector>

#include "meevc/stepper.hpp"

namespace meevc {

struct LedgerRow {
  long step = 0;
  double t = 0.0;
  double K = 0.0;
  double Ep = 0.0;
  double eps_v = 0.0;
  double eps_s = 0.0;
  double Ev = 0.0;
  double Es = 0.0;
  double E_res = 0.0;
  double enstrophy = 0.0;
  double total_vorticity = 0.0;
  double m_p_ratio = 0.0;
  double mdot_s = 0.0;
  double x_f = 0.0;
  double phi_min = 0.0;
  double phi_max = 0.0;
  double div_inf = 0.0;
};

inline constexpr std::array<const char*, 17> kLedgerColumns{
    "step", "t",         "K",               "Ep",        "eps_v",  "eps_s", "Ev",      "Es",     "E_res",
    "enstrophy", "total_vorticity", "m_p_ratio", "mdot_s", "x_f", "phi_min", "phi_max", "div_inf"};

/// Values of a row in column order.
std::array<double, 17> row_values(const LedgerRow& row);

/// Running sums and reference values carried between rows (and across restarts).
struct LedgerTotals {
  double Ev = 0.0;
  double Es = 0.0;
  double Ep0 = 0.0;
  double K_half0 = 0.0;
  double mass0 = 0.0;       // int phi^0
  double buoyancy0 = 0.0;   // <phi^0 e_g, u^{1/2}>
};

struct FrontOptions {
  double threshold = 0.01;
  int columns = 0;  // 0: one column per h_min along the channel
};

/// Depth-averaged concentration sampled on vertical columns of a channel mesh.
class FrontTracker {
 public:
  FrontTracker(const FunctionSpace& S, FrontOptions options);

  const std::vector<double>& columns() const { return xs_; }
  /// Depth average of phi on every column.
  std::vector<double> depth_averages(const Field& phi) const;
  /// Largest x where the depth average reaches the threshold, interpolated linearly
  /// toward the next column; the left end when no column does.
  double front(const Field& phi) const;

 private:
  struct Sample {
    Mesh::Index cell;
    std::vector<Mesh::Index> dofs;
    Eigen::RowVectorXd values;
    double weight;
  };
  FrontOptions options_;
  double x_min_ = 0.0, x_max_ = 0.0;
  std::vector<double> xs_;
  std::vector<std::vector<Sample>> samples_;
};

/// x_f with the default sampling.
double front_position(const Field& phi, double threshold);

/// int phi / mass0.
double suspended_mass(const Field& phi, double mass0);
/// -u_s int_{bottom} phi.
double sedimentation_rate(const Field& phi, double u_s);
/// Settling dissipation written with integration by parts of the diffusive part:
///   -u_s <e_g, grad phi> - kappa (<grad phi, grad y> - oint y grad phi . n).
/// Diagnostic only; not part of the ledger.
double eps_s_ref1_variant(const Field& phi, double u_s, double kappa);

class EnergyLedger {
 public:
  EnergyLedger(const Stepper& stepper, FrontOptions front = {});

  /// Records the reference values from the state right after startup.
  void start(const SimulationState& state);
  /// Row for a state that has just completed step k >= 1.
  LedgerRow update(const SimulationState& state);

  const LedgerTotals& totals() const { return totals_; }
  void restore(const LedgerTotals& totals) { totals_ = totals; }

  double kinetic_energy(const Field& u) const;
  double potential_energy(const Field& phi) const;
  /// <phi e_g, u>.
  double buoyancy_work(const Field& phi, const Field& u) const;

 private:
  const Stepper& stepper_;
  LedgerTotals totals_;
  Vector Ny_;
  std::unique_ptr<FrontTracker> front_;
};

}  // namespace meevc
