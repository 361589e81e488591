#include "meevc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace meevc {

std::array<double, 17> row_values(const LedgerRow& r) {
  return {static_cast<double>(r.step), r.t, r.K, r.Ep, r.eps_v, r.eps_s, r.Ev, r.Es, r.E_res,
          r.enstrophy, r.total_vorticity, r.m_p_ratio, r.mdot_s, r.x_f, r.phi_min, r.phi_max, r.div_inf};
}

// ---------------------------------------------------------------------------

FrontTracker::FrontTracker(const FunctionSpace& S, FrontOptions options) : options_(options) {
  if (!(options_.threshold > 0.0 && options_.threshold < 1.0))
    throw ConfigError("front threshold must lie in (0, 1)");
  if (S.is_vector()) throw ConfigError("front tracking needs a scalar space");
  const Mesh& mesh = S.mesh();
  if (!mesh.channel()) throw ConfigError("front tracking needs a channel mesh");
  const ChannelGeometry& g = *mesh.channel();
  x_min_ = g.x_min();
  x_max_ = g.x_max();
  const double h = mesh_stats(mesh).h_min;
  const int ncol = options_.columns > 0 ? options_.columns
                                        : std::max(2, static_cast<int>(std::ceil(g.length / h)) + 1);
  const int nseg = std::max(1, static_cast<int>(std::ceil(g.height / h)));
  const LineRule& line = gauss_legendre(S.polynomial_degree() + 1);
  for (int i = 0; i < ncol; ++i) {
    const double x = ncol == 1 ? x_min_ : x_min_ + (x_max_ - x_min_) * i / (ncol - 1);
    xs_.push_back(x);
    std::vector<Sample> col;
    for (int s = 0; s < nseg; ++s) {
      for (std::size_t q = 0; q < line.points.size(); ++q) {
        const double y = g.height * (s + line.points[q]) / nseg;
        const auto loc = mesh.locate({x, y}, 1e-9);
        if (!loc) throw ConfigError("front sampling point lies outside the mesh");
        const std::array<Point, 1> ref{loc->ref};
        const CellTabulation t = S.tabulate(loc->cell, ref, false);
        const auto dofs = S.cell_dofs(loc->cell);
        col.push_back({loc->cell, std::vector<Mesh::Index>(dofs.begin(), dofs.end()), t.value.row(0),
                       line.weights[q] / nseg});
      }
    }
    samples_.push_back(std::move(col));
  }
}

std::vector<double> FrontTracker::depth_averages(const Field& phi) const {
  std::vector<double> out;
  out.reserve(samples_.size());
  for (const auto& col : samples_) {
    double avg = 0.0;
    for (const Sample& s : col) {
      double v = 0.0;
      for (std::size_t i = 0; i < s.dofs.size(); ++i)
        v += s.values[static_cast<Eigen::Index>(i)] * phi.coeffs[static_cast<Eigen::Index>(s.dofs[i])];
      avg += s.weight * v;
    }
    out.push_back(avg);
  }
  return out;
}

double FrontTracker::front(const Field& phi) const {
  const std::vector<double> avg = depth_averages(phi);
  const double theta = options_.threshold;
  for (std::size_t i = avg.size(); i-- > 0;) {
    if (avg[i] < theta) continue;
    if (i + 1 == avg.size()) return xs_[i];
    const double frac = (avg[i] - theta) / (avg[i] - avg[i + 1]);
    return xs_[i] + frac * (xs_[i + 1] - xs_[i]);
  }
  return x_min_;
}

double front_position(const Field& phi, double threshold) {
  return FrontTracker(*phi.space, FrontOptions{threshold, 0}).front(phi);
}

double suspended_mass(const Field& phi, double mass0) {
  if (mass0 == 0.0) throw ConfigError("initial suspended mass is zero");
  return phi.space->basis_integrals().dot(phi.coeffs) / mass0;
}

double sedimentation_rate(const Field& phi, double u_s) {
  return -u_s * assemble_boundary_load(*phi.space, BoundaryTag::Bottom).dot(phi.coeffs);
}

double eps_s_ref1_variant(const Field& phi, double u_s, double kappa) {
  const double dy = assemble_derivative_load(*phi.space, 1).dot(phi.coeffs);
  const double flux = boundary_gradient_flux(phi, [](const Point& p) { return p.y; });
  return u_s * dy - kappa * (dy - flux);
}

// ---------------------------------------------------------------------------

EnergyLedger::EnergyLedger(const Stepper& stepper, FrontOptions front) : stepper_(stepper) {
  const OperatorSet& ops = stepper_.operators();
  Ny_ = ops.N * ops.y_coeffs;
  if (stepper_.physics().mode == Mode::Turbidity)
    front_ = std::make_unique<FrontTracker>(*stepper_.spaces().Phi, front);
}

double EnergyLedger::kinetic_energy(const Field& u) const {
  return 0.5 * u.coeffs.dot(stepper_.operators().M * u.coeffs);
}

double EnergyLedger::potential_energy(const Field& phi) const { return Ny_.dot(phi.coeffs); }

double EnergyLedger::buoyancy_work(const Field& phi, const Field& u) const {
  return stepper_.operators().buoyancy(phi).dot(u.coeffs);
}

void EnergyLedger::start(const SimulationState& state) {
  if (state.k != 0) throw StepError("ledger must start from the post-startup state");
  totals_ = {};
  totals_.K_half0 = kinetic_energy(state.u_half);
  if (stepper_.physics().mode == Mode::Turbidity) {
    totals_.Ep0 = potential_energy(state.phi);
    totals_.mass0 = stepper_.operators().w_integrals.dot(state.phi.coeffs);
    totals_.buoyancy0 = buoyancy_work(state.phi, state.u_half);
  }
}

LedgerRow EnergyLedger::update(const SimulationState& s) {
  const OperatorSet& ops = stepper_.operators();
  const PhysicsConfig& phys = stepper_.physics();
  const double dt = stepper_.time().dt;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  LedgerRow r;
  r.step = s.k;
  r.t = static_cast<double>(s.k) * dt;
  r.K = kinetic_energy(s.u_half);
  const Vector l = ops.viscous_load(s.omega);
  r.eps_v = phys.viscosity() * l.dot(0.5 * (s.u_half.coeffs + s.u_prev_half.coeffs));
  totals_.Ev += dt * r.eps_v;
  r.Ev = totals_.Ev;
  r.enstrophy = 0.5 * s.omega.coeffs.dot(ops.N * s.omega.coeffs);
  r.total_vorticity = ops.w_integrals.dot(s.omega.coeffs);
  r.div_inf = (ops.D * s.u_half.coeffs).cwiseAbs().maxCoeff();

  if (phys.mode == Mode::Turbidity) {
    const Vector mid = 0.5 * (s.phi.coeffs + s.phi_prev.coeffs);
    r.Ep = potential_energy(s.phi);
    r.eps_s = phys.settling_velocity * ops.w_integrals.dot(mid) + phys.diffusivity() * ops.dy_load.dot(mid);
    totals_.Es += dt * r.eps_s;
    r.Es = totals_.Es;
    r.m_p_ratio = ops.w_integrals.dot(s.phi.coeffs) / totals_.mass0;
    r.mdot_s = -phys.settling_velocity * ops.bottom_load.dot(s.phi.coeffs);
    r.x_f = front_->front(s.phi);
    r.phi_min = s.phi.coeffs.minCoeff();
    r.phi_max = s.phi.coeffs.maxCoeff();
  } else {
    r.m_p_ratio = nan;
    r.x_f = nan;
    r.phi_min = nan;
    r.phi_max = nan;
  }
  r.E_res = r.K + r.Ep + r.Ev + r.Es - totals_.K_half0 - totals_.Ep0;
  return r;
}

}  // namespace meevc
