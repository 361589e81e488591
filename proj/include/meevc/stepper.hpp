/// @file stepper.hpp
/// @brief Staggered midpoint time stepping for velocity, vorticity and particle concentration.
///
/// Velocity lives at half steps, vorticity, concentration and pressure at whole
/// steps. After the implicit startup every sub-step is one linear solve:
///   1. auxiliary vorticity  omega_tilde^{k+1/2} = curl_h u^{k+1/2}
///   2. concentration        phi^{k+1}
///   3. vorticity            omega^{k+1}
///   4. velocity/pressure    (u^{k+3/2}, p^{k+1})
/// The homogeneous mode (periodic meshes, no particles) runs steps 3 and 4 only.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "meevc/linsolve.hpp"
#include "meevc/operators.hpp"

namespace meevc {

class StepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode { Turbidity, Homogeneous };

Mode parse_mode(const std::string& name);
const char* to_string(Mode mode);

struct PhysicsConfig {
  Mode mode = Mode::Turbidity;
  double grashof = 5e6;
  double schmidt = 1.0;
  double settling_velocity = 0.02;
  double nu = 0.0;  // homogeneous mode only

  /// 1/sqrt(Gr) in turbidity mode, nu otherwise.
  double viscosity() const;
  /// 1/sqrt(Gr Sc^2).
  double diffusivity() const;
  void validate() const;
};

struct TimeConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  double startup_tol = 1e-10;
  int startup_max_iter = 25;

  /// round(t_end / dt).
  long num_steps() const;
  void validate() const;
};

enum class SolverStrategy { Lu, Cg };

SolverStrategy parse_strategy(const std::string& name);
const char* to_string(SolverStrategy s);

struct SolverConfig {
  SolverStrategy strategy = SolverStrategy::Lu;
  double tolerance = 1e-12;  // CG relative residual
};

enum class VelocityInit { Zero, TaylorGreen, Random };

VelocityInit parse_velocity_init(const std::string& name);
const char* to_string(VelocityInit v);

struct InitialCondition {
  /// Width of the tanh interface; non-positive means 2 h_min.
  double interface_width = 0.0;
  VelocityInit velocity = VelocityInit::Zero;
  std::uint64_t seed = 1;
};

struct SimulationState {
  long k = 0;
  Field u_half;       // u^{k+1/2}
  Field omega;        // omega^k
  Field phi;          // phi^k (empty in homogeneous mode)
  Field p_bar;        // total pressure at the last velocity solve
  Field omega_tilde;  // curl_h u^{k-1/2}; after startup, curl_h of the startup midpoint
  Field u_prev_half;  // u^{k-1/2}; equal to u^0 right after startup
  Field phi_prev;     // phi^{k-1}; equal to phi^0 right after startup
};

struct StartupReport {
  int iterations = 0;
  double last_update = 0.0;  // relative M-norm change of the final iteration
};

struct StepReport {
  SolverReport aux_vorticity, concentration, vorticity, velocity;
};

struct Spaces {
  SpacePtr U, W, Q, Phi;  // Phi is null in homogeneous mode
};

/// RT_N with u.n = 0 on every wall, CG_N with zero vorticity on the channel ends,
/// DG_{N-1}, and an unconstrained CG_N for the concentration.
Spaces make_spaces(std::shared_ptr<const Mesh> mesh, int degree, Mode mode);

/// Smoothed lock indicator 1/2 (1 - tanh(x / delta)).
double lock_profile(double x, double delta);

class Stepper {
 public:
  Stepper(std::shared_ptr<const Mesh> mesh, int degree, PhysicsConfig physics, TimeConfig time,
          SolverConfig solver = {}, bool literal_top_wall_sign = false);

  const Spaces& spaces() const { return spaces_; }
  const OperatorSet& operators() const { return *ops_; }
  const PhysicsConfig& physics() const { return physics_; }
  const TimeConfig& time() const { return time_; }
  double interface_width(const InitialCondition& ic) const;

  /// Initial fields at t = 0 (u^0 in u_half, k = 0), before startup.
  SimulationState initial_fields(const InitialCondition& ic) const;
  /// Implicit half step from t = 0 to t = dt/2 by fixed-point iteration. Without
  /// `require_convergence` the iterate at the cap is accepted.
  StartupReport startup(SimulationState& state, bool require_convergence = true);
  /// initial_fields + startup.
  SimulationState initialize(const InitialCondition& ic, StartupReport* report = nullptr);

  /// Advances k -> k+1 with the scheme of the configured mode.
  StepReport step(SimulationState& state);
  StepReport step_turbidity(SimulationState& state);
  StepReport step_homogeneous(SimulationState& state);

  /// curl_h u: the CG_N field with <omega_tilde, xi> = <u, curl xi>.
  Field curl_h(const Field& u);

 private:
  /// Velocity/pressure solve over a step of length h from u_old, with rotation and
  /// viscous terms built from `omega` and buoyancy from `phi` (may be null).
  SaddleResult solve_velocity(const Field& u_old, const Field& omega, const Field* phi, double h);

  std::shared_ptr<const Mesh> mesh_;
  int degree_;
  PhysicsConfig physics_;
  TimeConfig time_;
  SolverConfig solver_;
  Spaces spaces_;
  std::unique_ptr<OperatorSet> ops_;
  std::unique_ptr<FactoredSystem> w_mass_;
  SaddleSolver saddle_;
  RepeatedLu phi_lu_, omega_lu_;
  std::vector<long> phi_free_;
};

}  // namespace meevc
