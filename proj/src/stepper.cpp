#include "meevc/stepper.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace meevc {

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

template <class Fn>
auto guarded(long k, const char* tag, Fn&& fn) {
  try {
    return fn();
  } catch (const SolverError& e) {
    std::ostringstream msg;
    msg << "step " << k << ", " << tag << ": " << e.what();
    throw StepError(msg.str());
  }
}

double m_norm(const SparseMatrix& M, const Vector& u) { return std::sqrt(std::max(0.0, u.dot(M * u))); }

std::vector<std::size_t> constrained_dofs(const FunctionSpace& s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < s.dim(); ++i)
    if (s.is_constrained(i)) out.push_back(i);
  return out;
}

}  // namespace

Mode parse_mode(const std::string& name) {
  const std::string n = lower(name);
  if (n == "turbidity") return Mode::Turbidity;
  if (n == "homogeneous") return Mode::Homogeneous;
  throw ConfigError("unknown mode '" + name + "' (expected turbidity or homogeneous)");
}

const char* to_string(Mode mode) { return mode == Mode::Turbidity ? "turbidity" : "homogeneous"; }

SolverStrategy parse_strategy(const std::string& name) {
  const std::string n = lower(name);
  if (n == "lu") return SolverStrategy::Lu;
  if (n == "cg") return SolverStrategy::Cg;
  throw ConfigError("unknown solver strategy '" + name + "' (expected lu or cg)");
}

const char* to_string(SolverStrategy s) { return s == SolverStrategy::Lu ? "lu" : "cg"; }

VelocityInit parse_velocity_init(const std::string& name) {
  const std::string n = lower(name);
  if (n == "zero") return VelocityInit::Zero;
  if (n == "taylor_green") return VelocityInit::TaylorGreen;
  if (n == "random") return VelocityInit::Random;
  throw ConfigError("unknown initial velocity '" + name + "' (expected zero, taylor_green or random)");
}

const char* to_string(VelocityInit v) {
  switch (v) {
    case VelocityInit::Zero: return "zero";
    case VelocityInit::TaylorGreen: return "taylor_green";
    case VelocityInit::Random: return "random";
  }
  return "?";
}

double PhysicsConfig::viscosity() const {
  return mode == Mode::Turbidity ? 1.0 / std::sqrt(grashof) : nu;
}

double PhysicsConfig::diffusivity() const { return 1.0 / std::sqrt(grashof * schmidt * schmidt); }

void PhysicsConfig::validate() const {
  if (!(grashof > 0.0)) throw ConfigError("physics.grashof must be positive");
  if (!(schmidt > 0.0)) throw ConfigError("physics.schmidt must be positive");
  if (!(settling_velocity >= 0.0)) throw ConfigError("physics.settling_velocity must be non-negative");
  if (!(nu >= 0.0)) throw ConfigError("physics.nu must be non-negative");
}

long TimeConfig::num_steps() const { return std::lround(t_end / dt); }

void TimeConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time.dt must be positive");
  if (!(t_end >= dt) || !std::isfinite(t_end)) throw ConfigError("time.t_end must be at least time.dt");
  if (!(startup_tol > 0.0)) throw ConfigError("time.startup_tol must be positive");
  if (startup_max_iter < 1) throw ConfigError("time.startup_max_iter must be at least 1");
}

Spaces make_spaces(std::shared_ptr<const Mesh> mesh, int degree, Mode mode) {
  Spaces s;
  std::vector<BoundaryTag> walls, ends;
  if (!mesh->periodic()) {
    walls = {BoundaryTag::Top, BoundaryTag::Right, BoundaryTag::Bottom, BoundaryTag::Left};
    ends = {BoundaryTag::Right, BoundaryTag::Left};
  }
  s.U = make_space(mesh, Family::RT, degree, walls);
  s.W = make_space(mesh, Family::CG, degree, ends);
  s.Q = make_space(mesh, Family::DG, degree);
  if (mode == Mode::Turbidity) s.Phi = make_space(mesh, Family::CG, degree);
  return s;
}

double lock_profile(double x, double delta) { return 0.5 * (1.0 - std::tanh(x / delta)); }

// ---------------------------------------------------------------------------

Stepper::Stepper(std::shared_ptr<const Mesh> mesh, int degree, PhysicsConfig physics, TimeConfig time,
                 SolverConfig solver, bool literal_top_wall_sign)
    : mesh_(std::move(mesh)),
      degree_(degree),
      physics_(physics),
      time_(time),
      solver_(solver),
      spaces_(make_spaces(mesh_, degree, physics.mode)),
      saddle_(spaces_.U, spaces_.Q) {
  physics_.validate();
  time_.validate();
  if (physics_.mode == Mode::Turbidity && !mesh_->channel())
    throw ConfigError("turbidity mode needs a channel mesh with wall tags");
  if (physics_.mode == Mode::Homogeneous && !mesh_->periodic())
    throw ConfigError("homogeneous mode needs a periodic mesh");
  ops_ = std::make_unique<OperatorSet>(spaces_.U, spaces_.W, spaces_.Q, spaces_.Phi, literal_top_wall_sign);
  if (solver_.strategy == SolverStrategy::Lu)
    w_mass_ = std::make_unique<FactoredSystem>(ops_->N, constrained_dofs(*spaces_.W));
  if (spaces_.Phi) phi_free_ = spaces_.Phi->free_index();
}

double Stepper::interface_width(const InitialCondition& ic) const {
  return ic.interface_width > 0.0 ? ic.interface_width : 2.0 * mesh_stats(*mesh_).h_min;
}

Field Stepper::curl_h(const Field& u) {
  const Vector r = ops_->curl_h_rhs(u);
  if (w_mass_) return Field(spaces_.W, w_mass_->solve(r).x);
  LinearSystem sys{ops_->N, r, constrained_dofs(*spaces_.W), {}};
  return Field(spaces_.W, cg_solve(sys, solver_.tolerance, 10 * static_cast<int>(spaces_.W->dim()) + 100).x);
}

SimulationState Stepper::initial_fields(const InitialCondition& ic) const {
  SimulationState s;
  s.k = 0;
  s.u_half = Field(spaces_.U);
  s.omega = Field(spaces_.W);
  s.p_bar = Field(spaces_.Q);
  s.omega_tilde = Field(spaces_.W);

  if (physics_.mode == Mode::Turbidity) {
    const double delta = interface_width(ic);
    s.phi = project(spaces_.Phi, ScalarFn([delta](const Point& p) { return lock_profile(p.x, delta); }));
    s.phi_prev = s.phi;
  }

  switch (ic.velocity) {
    case VelocityInit::Zero: break;
    case VelocityInit::TaylorGreen:
      s.u_half = interpolate(spaces_.U, VectorFn([](const Point& p) {
                               return Vec2(std::sin(p.x) * std::cos(p.y), -std::cos(p.x) * std::sin(p.y));
                             }));
      break;
    case VelocityInit::Random: {
      // stream function of a few random low Fourier modes, velocity = its exact curl
      const auto [lx, ly] = mesh_->periodic() ? mesh_->period()
                                              : std::array<double, 2>{mesh_->bbox_max().x - mesh_->bbox_min().x,
                                                                      mesh_->bbox_max().y - mesh_->bbox_min().y};
      std::mt19937_64 rng(ic.seed);
      std::uniform_real_distribution<double> coef(-1.0, 1.0);
      struct Mode2 { int kx, ky; double a, b; };
      std::vector<Mode2> modes;
      for (int kx = 0; kx <= 3; ++kx)
        for (int ky = -3; ky <= 3; ++ky)
          if (kx > 0 || ky > 0) modes.push_back({kx, ky, coef(rng), coef(rng)});
      const ScalarFn psi = [modes, lx, ly](const Point& p) {
        double v = 0.0;
        for (const auto& m : modes) {
          const double arg = 2.0 * std::numbers::pi * (m.kx * p.x / lx + m.ky * p.y / ly);
          v += (m.a * std::cos(arg) + m.b * std::sin(arg)) / (m.kx * m.kx + m.ky * m.ky);
        }
        return v;
      };
      Field psi_h = interpolate(spaces_.W, psi);
      psi_h.apply_constraints();
      s.u_half = interpolate(spaces_.U, CellVectorFn([&psi_h](Mesh::Index c, const Point& x) {
                               const CellMap map = CellMap::of(psi_h.space->mesh(), c);
                               const Vec2 g = evaluate_gradient_in_cell(psi_h, c, map.to_reference(x));
                               return Vec2(g.y(), -g.x());
                             }));
      break;
    }
  }
  s.u_half.apply_constraints();
  s.u_prev_half = s.u_half;
  return s;
}

SaddleResult Stepper::solve_velocity(const Field& u_old, const Field& omega, const Field* phi, double h) {
  const RotationForms rot = ops_->rotation(omega);
  const SparseMatrix A = ops_->M / h + 0.5 * rot.R;
  Vector f = ops_->M * u_old.coeffs / h - 0.5 * (rot.R * u_old.coeffs) - physics_.viscosity() * rot.l;
  if (phi) f += ops_->buoyancy(*phi);
  return saddle_.solve(A, ops_->D, f);
}

StartupReport Stepper::startup(SimulationState& state, bool require_convergence) {
  if (state.k != 0) throw StepError("startup requires the initial state (k = 0)");
  const Field u0 = state.u_half;
  if (physics_.mode == Mode::Homogeneous) state.omega = curl_h(u0);
  const Field* phi = physics_.mode == Mode::Turbidity ? &state.phi : nullptr;
  const double h = 0.5 * time_.dt;

  StartupReport rep;
  Field u = u0;
  Field omega_q(spaces_.W);
  SaddleResult res;
  for (int m = 1; m <= time_.startup_max_iter; ++m) {
    Field mid(spaces_.U, 0.5 * (u.coeffs + u0.coeffs));
    omega_q = guarded(0, "startup auxiliary vorticity", [&] { return curl_h(mid); });
    res = guarded(0, "startup velocity", [&] { return solve_velocity(u0, omega_q, phi, h); });
    const double change = m_norm(ops_->M, res.u - u.coeffs);
    const double size = m_norm(ops_->M, res.u);
    u.coeffs = res.u;
    rep.iterations = m;
    rep.last_update = size > 0.0 ? change / size : change;
    if (rep.last_update <= time_.startup_tol || (!require_convergence && m == time_.startup_max_iter)) {
      state.u_prev_half = u0;
      state.u_half = u;
      state.p_bar = Field(spaces_.Q, res.p);
      state.omega_tilde = omega_q;
      return rep;
    }
  }
  std::ostringstream msg;
  msg << "startup did not converge in " << time_.startup_max_iter
      << " iterations (last relative update " << rep.last_update << ")";
  throw StepError(msg.str());
}

SimulationState Stepper::initialize(const InitialCondition& ic, StartupReport* report) {
  SimulationState s = initial_fields(ic);
  const StartupReport rep = startup(s);
  if (report) *report = rep;
  return s;
}

StepReport Stepper::step(SimulationState& state) {
  return physics_.mode == Mode::Turbidity ? step_turbidity(state) : step_homogeneous(state);
}

StepReport Stepper::step_turbidity(SimulationState& state) {
  if (physics_.mode != Mode::Turbidity) throw StepError("turbidity step in homogeneous mode");
  const long k = state.k;
  const double dt = time_.dt, nu = physics_.viscosity(), kappa = physics_.diffusivity();
  const OperatorSet& ops = *ops_;
  StepReport rep;

  // 1. auxiliary vorticity at k+1/2
  const Field omega_tilde = guarded(k, "sub-step 1 (auxiliary vorticity)", [&] { return curl_h(state.u_half); });

  // 2. concentration
  const SparseMatrix Du = ops.particle_convection(state.u_half, physics_.settling_velocity);
  const SparseMatrix T = 0.5 * (Du + kappa * ops.L);
  const SparseMatrix Nt = ops.N / dt;
  const Vector phi_rhs = Nt * state.phi.coeffs - T * state.phi.coeffs;
  const SparseMatrix phi_lhs = Nt + T;
  const SolveResult phi_sol =
      guarded(k, "sub-step 2 (concentration)", [&] { return phi_lu_.solve(phi_lhs, phi_free_, phi_rhs); });
  rep.concentration = phi_sol.report;
  Field phi_new(spaces_.Phi, phi_sol.x);
  const Field phi_mid(spaces_.Phi, 0.5 * (phi_new.coeffs + state.phi.coeffs));

  // 3. vorticity
  const SparseMatrix C = skew_convection(ops.vorticity_convection(state.u_half));
  const SparseMatrix V = 0.5 * C + (0.5 * nu) * ops.L;
  Vector w_rhs = Nt * state.omega.coeffs - V * state.omega.coeffs;
  w_rhs += ops.baroclinic(phi_mid);
  w_rhs += nu * ops.vorticity_neumann(omega_tilde);
  const SparseMatrix w_lhs = Nt + V;
  const SolveResult w_sol = guarded(k, "sub-step 3 (vorticity)", [&] {
    return omega_lu_.solve(w_lhs, spaces_.W->free_index(), w_rhs);
  });
  rep.vorticity = w_sol.report;
  Field omega_new(spaces_.W, w_sol.x);

  // 4. velocity and pressure
  const SaddleResult v_sol =
      guarded(k, "sub-step 4 (velocity)", [&] { return solve_velocity(state.u_half, omega_new, &phi_new, dt); });
  rep.velocity = v_sol.report;

  state.u_prev_half = state.u_half;
  state.u_half.coeffs = v_sol.u;
  state.phi_prev = state.phi;
  state.phi = std::move(phi_new);
  state.omega = std::move(omega_new);
  state.p_bar.coeffs = v_sol.p;
  state.omega_tilde = omega_tilde;
  state.k = k + 1;
  return rep;
}

StepReport Stepper::step_homogeneous(SimulationState& state) {
  if (physics_.mode != Mode::Homogeneous) throw StepError("homogeneous step in turbidity mode");
  const long k = state.k;
  const double dt = time_.dt, nu = physics_.viscosity();
  const OperatorSet& ops = *ops_;
  StepReport rep;

  const SparseMatrix C = skew_convection(ops.vorticity_convection(state.u_half));
  const SparseMatrix V = 0.5 * C + (0.5 * nu) * ops.L;
  const SparseMatrix Nt = ops.N / dt;
  const Vector w_rhs = Nt * state.omega.coeffs - V * state.omega.coeffs;
  const SparseMatrix w_lhs = Nt + V;
  const SolveResult w_sol = guarded(k, "vorticity", [&] {
    return omega_lu_.solve(w_lhs, spaces_.W->free_index(), w_rhs);
  });
  rep.vorticity = w_sol.report;
  Field omega_new(spaces_.W, w_sol.x);

  const SaddleResult v_sol =
      guarded(k, "velocity", [&] { return solve_velocity(state.u_half, omega_new, nullptr, dt); });
  rep.velocity = v_sol.report;

  state.u_prev_half = state.u_half;
  state.u_half.coeffs = v_sol.u;
  state.omega = std::move(omega_new);
  state.p_bar.coeffs = v_sol.p;
  state.k = k + 1;
  return rep;
}

}  // namespace meevc
