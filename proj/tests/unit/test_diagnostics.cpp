#include <doctest.h>

#include <cmath>
#include <limits>

#include "meevc/diagnostics.hpp"

using namespace meevc;

namespace {

using MeshPtr = std::shared_ptr<const Mesh>;

MeshPtr lock_channel(int nx, int ny, DiagonalPattern p = DiagonalPattern::Left) {
  return std::make_shared<const Mesh>(build_channel_mesh({13.0, 1.0, 1.0}, nx, ny, p));
}

PhysicsConfig turbidity(double us) {
  PhysicsConfig p;
  p.settling_velocity = us;
  return p;
}

TimeConfig time_cfg(double dt) {
  TimeConfig t;
  t.dt = dt;
  return t;
}

Field constant(const SpacePtr& s, double v) {
  return interpolate(s, ScalarFn([v](const Point&) { return v; }));
}

}  // namespace

TEST_CASE("column names and row order") {
  CHECK(kLedgerColumns.size() == 17);
  CHECK(std::string(kLedgerColumns.front()) == "step");
  CHECK(std::string(kLedgerColumns.back()) == "div_inf");
  LedgerRow r;
  r.step = 4;
  r.E_res = 2.5;
  r.x_f = -1.0;
  const auto v = row_values(r);
  CHECK(v[0] == 4.0);
  CHECK(v[8] == 2.5);
  CHECK(v[13] == -1.0);
}

TEST_CASE("sedimentation rate and suspended mass") {
  const auto mesh = lock_channel(26, 2);
  const auto Phi = make_space(mesh, Family::CG, 2);
  CHECK(sedimentation_rate(Field(Phi), 0.02) == 0.0);
  CHECK(sedimentation_rate(constant(Phi, 1.0), 0.02) == doctest::Approx(-0.26).epsilon(1e-13));
  const Field one = constant(Phi, 1.0);
  CHECK(suspended_mass(one, 13.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(suspended_mass(one, 0.0), ConfigError);
}

TEST_CASE("settling dissipation with the diffusive term integrated by parts") {
  const double us = 0.02, kappa = 1e-3;
  const auto sq = std::make_shared<const Mesh>(build_channel_mesh({1.0, 1.0, 0.5}, 3, 3, DiagonalPattern::Right));
  const auto S = make_space(sq, Family::CG, 2);
  CHECK(std::abs(eps_s_ref1_variant(constant(S, 0.4), us, kappa)) <= 1e-15);
  const Field lin = interpolate(S, ScalarFn([](const Point& p) { return 1.0 - p.y; }));
  CHECK(eps_s_ref1_variant(lin, us, kappa) == doctest::Approx(-us).epsilon(1e-12));
  // phi = y^2 on the channel: <dy phi, 1> = L, oint y dn phi = 2 L on the top wall
  const auto mesh = lock_channel(13, 2);
  const auto C = make_space(mesh, Family::CG, 2);
  const Field y2 = interpolate(C, ScalarFn([](const Point& p) { return p.y * p.y; }));
  CHECK(eps_s_ref1_variant(y2, us, kappa) == doctest::Approx(us * 13.0 + kappa * 13.0).epsilon(1e-12));
}

TEST_CASE("front position") {
  const auto mesh = lock_channel(52, 4);
  const auto Phi = make_space(mesh, Family::CG, 2);
  const FrontTracker ft(*Phi, {});
  const auto& xs = ft.columns();
  const double spacing = xs[1] - xs[0];
  CHECK(xs.front() == -1.0);
  CHECK(xs.back() == doctest::Approx(12.0));
  CHECK(spacing <= mesh_stats(*mesh).h_min + 1e-12);

  CHECK(ft.front(Field(Phi)) == -1.0);
  CHECK(ft.front(constant(Phi, 1.0)) == doctest::Approx(12.0));
  const Field lock = interpolate(Phi, ScalarFn([](const Point& p) { return p.x <= 0.0 ? 1.0 : 0.0; }));
  CHECK(std::abs(ft.front(lock)) <= spacing);

  // depth averages of y are 1/2; of a linear ramp, the ramp itself
  for (double a : ft.depth_averages(interpolate(Phi, ScalarFn([](const Point& p) { return p.y; }))))
    CHECK(a == doctest::Approx(0.5).epsilon(1e-13));
  const Field ramp = interpolate(Phi, ScalarFn([](const Point& p) { return 0.5 - 0.1 * p.x; }));
  const auto avg = ft.depth_averages(ramp);
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(avg[i] == doctest::Approx(0.5 - 0.1 * xs[i]).epsilon(1e-12));
  // 0.5 - 0.1 x = 0.01 at x = 4.9, found between columns by linear interpolation
  CHECK(ft.front(ramp) == doctest::Approx(4.9).epsilon(1e-12));
  CHECK(front_position(ramp, 0.2) == doctest::Approx(3.0).epsilon(1e-12));

  CHECK_THROWS_AS(FrontTracker(*Phi, {1.5, 0}), ConfigError);
  const auto t = std::make_shared<const Mesh>(build_periodic_rect_mesh(1.0, 1.0, 3, 3));
  CHECK_THROWS_AS(FrontTracker(*make_space(t, Family::CG, 1), {}), ConfigError);
}

TEST_CASE("ledger of a motionless empty channel is zero") {
  Stepper s(lock_channel(13, 2), 1, turbidity(0.02), time_cfg(1e-3));
  SimulationState st = s.initial_fields({});
  st.phi.coeffs.setZero();
  st.phi_prev = st.phi;
  s.startup(st);
  EnergyLedger ledger(s);
  ledger.start(st);
  CHECK(ledger.totals().mass0 == 0.0);
  s.step(st);
  const LedgerRow r = ledger.update(st);
  for (double v : {r.K, r.Ep, r.eps_v, r.eps_s, r.Ev, r.Es, r.E_res, r.enstrophy, r.total_vorticity, r.mdot_s, r.div_inf})
    CHECK(v == 0.0);
}

TEST_CASE("potential energy of a full channel is L H^2 / 2") {
  Stepper s(lock_channel(13, 2), 2, turbidity(0.02), time_cfg(1e-3));
  EnergyLedger ledger(s);
  CHECK(ledger.potential_energy(constant(s.spaces().Phi, 1.0)) == doctest::Approx(6.5).epsilon(1e-13));
}

TEST_CASE("lock-exchange ledger: mass budget, energy identity, monotone sums") {
  const auto mesh = lock_channel(26, 2);
  const double dt = 1e-3, us = 0.02;
  Stepper s(mesh, 2, turbidity(us), time_cfg(dt));
  SimulationState st = s.initialize({});
  EnergyLedger ledger(s);
  ledger.start(st);
  const LedgerTotals t0 = ledger.totals();
  CHECK(t0.K_half0 > 0.0);
  CHECK(t0.Ep0 == doctest::Approx(ledger.potential_energy(st.phi)));
  CHECK(suspended_mass(st.phi, t0.mass0) == 1.0);

  double prev_ratio = 1.0, prev_Ev = 0.0, prev_Es = 0.0;
  const Vector bottom = assemble_boundary_load(*s.spaces().Phi, BoundaryTag::Bottom);
  for (int k = 1; k <= 30; ++k) {
    const Field phi_old = st.phi;
    s.step(st);
    const LedgerRow r = ledger.update(st);
    CHECK(r.step == k);
    CHECK(r.t == doctest::Approx(k * dt));
    const double mid_bottom = bottom.dot(0.5 * (st.phi.coeffs + phi_old.coeffs));
    CHECK(std::abs(r.m_p_ratio - (prev_ratio - dt * us * mid_bottom / t0.mass0)) <= 1e-10);
    CHECK(r.m_p_ratio <= prev_ratio);
    CHECK(r.mdot_s <= 0.0);
    CHECK(r.mdot_s == doctest::Approx(sedimentation_rate(st.phi, us)).epsilon(1e-13));
    const double identity = 0.5 * dt * (ledger.buoyancy_work(st.phi, st.u_half) - t0.buoyancy0);
    CHECK(std::abs(r.E_res - identity) <= 1e-9);
    if (r.eps_v >= 0.0) CHECK(r.Ev >= prev_Ev);
    if (r.eps_s >= 0.0) CHECK(r.Es >= prev_Es);
    CHECK(r.K == doctest::Approx(ledger.kinetic_energy(st.u_half)));
    CHECK(r.phi_min <= r.phi_max);
    CHECK(r.div_inf <= 1e-10);
    prev_ratio = r.m_p_ratio;
    prev_Ev = r.Ev;
    prev_Es = r.Es;
  }

  EnergyLedger copy(s);
  copy.restore(ledger.totals());
  CHECK(copy.totals().Ev == ledger.totals().Ev);
  CHECK_THROWS_AS(copy.start(st), StepError);
}

TEST_CASE("no settling keeps the suspended mass") {
  Stepper s(lock_channel(26, 2), 1, turbidity(0.0), time_cfg(1e-3));
  SimulationState st = s.initialize({});
  EnergyLedger ledger(s);
  ledger.start(st);
  for (int k = 0; k < 10; ++k) {
    s.step(st);
    CHECK(std::abs(ledger.update(st).m_p_ratio - 1.0) <= 1e-10);
  }
}

TEST_CASE("homogeneous inviscid ledger has no residual and no particle columns") {
  PhysicsConfig p;
  p.mode = Mode::Homogeneous;
  p.nu = 0.0;
  const auto mesh = std::make_shared<const Mesh>(build_periodic_rect_mesh(2.0 * M_PI, 2.0 * M_PI, 5, 5));
  Stepper s(mesh, 1, p, time_cfg(0.01));
  InitialCondition ic;
  ic.velocity = VelocityInit::Random;
  SimulationState st = s.initialize(ic);
  EnergyLedger ledger(s);
  ledger.start(st);
  s.step(st);
  const LedgerRow r = ledger.update(st);
  CHECK(std::abs(r.E_res) <= 1e-10 * ledger.totals().K_half0);
  CHECK(r.Ep == 0.0);
  CHECK(r.eps_v == 0.0);
  CHECK(std::isnan(r.x_f));
  CHECK(std::isnan(r.m_p_ratio));
  CHECK(std::isnan(r.phi_min));
  CHECK(std::isnan(r.phi_max));
}
