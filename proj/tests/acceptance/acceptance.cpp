// Acceptance checks. Prints one line per criterion and exits non-zero when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "meevc/driver.hpp"
#include "meevc/io.hpp"

using namespace meevc;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;
std::map<int, std::string> results;  // printed in criterion order at the end

void report(int id, bool pass, const std::string& detail) {
  results[id] = std::string(pass ? "PASS" : "FAIL") + "  " + detail;
  std::fprintf(stderr, "criterion %d done\n", id);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string source_path(const char* rel) { return std::string(MEEVC_SOURCE_DIR) + "/" + rel; }

// Largest |D u| seen on any accepted velocity solve of any run below.
double max_div = 0.0;
long div_samples = 0;

void record_div(double d) {
  max_div = std::max(max_div, d);
  ++div_samples;
}

// ---------------------------------------------------------------------------

void criterion1() {
  const auto t0 = Clock::now();
  const RunConfig cfg = load_config(source_path("configs/table1_mesh_info.cfg"));
  const MeshInfo info = mesh_info(cfg);
  const auto mesh = build_mesh(cfg);
  const auto W = make_space(mesh, Family::CG, 4);
  const auto U = make_space(mesh, Family::RT, 4);
  const auto Q = make_space(mesh, Family::DG, 4);
  const double secs = seconds_since(t0);
  const bool counts = info.stats.vertices == 619 && info.stats.edges == 1734 && info.stats.cells == 1116 &&
                      info.dofs_W == 9169 && info.dofs_U == 20328 && info.dofs_Q == 11160 &&
                      W->dim() == 9169 && U->dim() == 20328 && Q->dim() == 11160;
  const bool eq = std::abs(info.equivalent_cells - 2.6e4) < 0.05e4;
  report(1, counts && eq && secs < 1.0,
         fmt("(V,E,C)=(%zu,%zu,%zu) d_W=%zu d_U=%zu d_Q=%zu built=(%zu,%zu,%zu) eq_cells=%.3e time=%.2fs",
             info.stats.vertices, info.stats.edges, info.stats.cells, info.dofs_W, info.dofs_U, info.dofs_Q,
             W->dim(), U->dim(), Q->dim(), info.equivalent_cells, secs));
}

// ---------------------------------------------------------------------------

/// Structured mesh with interior points moved by up to a quarter of the cell size.
std::shared_ptr<const Mesh> random_mesh(bool periodic, std::mt19937_64& gen) {
  std::uniform_int_distribution<int> cells(2, 7);
  std::uniform_int_distribution<int> pat(0, 2);
  std::uniform_real_distribution<double> jitter(-0.25, 0.25);
  const int nx = cells(gen), ny = cells(gen);
  const auto pattern = static_cast<DiagonalPattern>(pat(gen));
  const ChannelGeometry geom{3.0, 1.0, 1.0};
  const Mesh base = periodic ? build_periodic_rect_mesh(2.0, 1.5, nx, ny, pattern)
                             : build_channel_mesh(geom, nx, ny, pattern);
  const double hx = (periodic ? 2.0 : geom.length) / nx, hy = (periodic ? 1.5 : geom.height) / ny;
  const Point lo = base.bbox_min(), hi = base.bbox_max();
  std::vector<Point> pts;
  std::vector<Mesh::Index> pv;
  for (Mesh::Index p = 0; p < base.num_points(); ++p) {
    Point x = base.point(p);
    const double eps = 1e-9;
    if (x.x > lo.x + eps && x.x < hi.x - eps && x.y > lo.y + eps && x.y < hi.y - eps) {
      x.x += jitter(gen) * hx;
      x.y += jitter(gen) * hy;
    }
    pts.push_back(x);
    pv.push_back(base.vertex_of_point(p));
  }
  std::vector<std::array<Mesh::Index, 3>> tris;
  for (Mesh::Index c = 0; c < base.num_cells(); ++c) tris.push_back(base.cell_points(c));
  if (periodic)
    return std::make_shared<const Mesh>(
        Mesh::from_periodic_cells(std::move(pts), std::move(tris), std::move(pv), lo, base.period()));
  return std::make_shared<const Mesh>(Mesh::from_cells(std::move(pts), std::move(tris), geom));
}

void criterion2() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(20240601);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const bool periodic = trial % 2 == 1;
    const int n = 1 + (trial / 2) % 2;
    const auto mesh = random_mesh(periodic, gen);
    const auto W = make_space(mesh, Family::CG, n);
    const auto U = make_space(mesh, Family::RT, n);
    const auto Q = make_space(mesh, Family::DG, n);
    Field psi(W);
    for (Eigen::Index i = 0; i < psi.coeffs.size(); ++i) psi.coeffs[i] = coef(gen);
    const Mesh& m = *mesh;
    const Field u = interpolate(U, CellVectorFn([&](Mesh::Index c, const Point& x) {
                                  const Vec2 g = evaluate_gradient_in_cell(psi, c, CellMap::of(m, c).to_reference(x));
                                  return Vec2(g.y(), -g.x());
                                }));
    worst = std::max(worst, (assemble_div(*U, *Q) * u.coeffs).cwiseAbs().maxCoeff());
  }
  const double secs = seconds_since(t0);
  report(2, worst <= 1e-12 && secs < 10.0, fmt("max |D curl psi| = %.3e over 50 fields, time=%.2fs", worst, secs));
}

// ---------------------------------------------------------------------------

void criterion4() {
  const auto t0 = Clock::now();
  const auto mesh = std::make_shared<const Mesh>(build_periodic_rect_mesh(2.0 * std::numbers::pi, 2.0 * std::numbers::pi, 16, 16, DiagonalPattern::Left));
  PhysicsConfig phys;
  phys.mode = Mode::Homogeneous;
  phys.nu = 0.0;
  TimeConfig time;
  time.dt = 0.01;
  time.t_end = 2.0;
  Stepper stepper(mesh, 1, phys, time);
  InitialCondition ic;
  ic.velocity = VelocityInit::Random;
  ic.seed = 7;
  SimulationState s = stepper.initialize(ic);
  EnergyLedger ledger(stepper);
  ledger.start(s);
  const OperatorSet& ops = stepper.operators();
  const double K0 = ledger.totals().K_half0;
  const double Z0 = 0.5 * s.omega.coeffs.dot(ops.N * s.omega.coeffs);
  const double G0 = ops.w_integrals.dot(s.omega.coeffs);
  const double area = mesh_stats(*mesh).total_area;
  const double G_scale = std::sqrt(area * 2.0 * Z0);
  double dK = 0.0, dZ = 0.0, dG = 0.0;
  for (int k = 0; k < 200; ++k) {
    stepper.step(s);
    const LedgerRow r = ledger.update(s);
    record_div(r.div_inf);
    dK = std::max(dK, std::abs(r.K - K0) / K0);
    dZ = std::max(dZ, std::abs(r.enstrophy - Z0) / Z0);
    dG = std::max(dG, std::abs(r.total_vorticity - G0) / G_scale);
  }
  const double secs = seconds_since(t0);
  report(4, dK <= 1e-9 && dZ <= 1e-9 && dG <= 1e-11 && secs < 60.0,
         fmt("K drift %.3e, enstrophy drift %.3e, total vorticity drift %.3e (K0=%.4e Z0=%.4e), time=%.2fs", dK, dZ,
             dG, K0, Z0, secs));
}

// ---------------------------------------------------------------------------

double taylor_green_error(int cells) {
  RunConfig cfg = load_config(source_path("configs/taylor_green.cfg"));
  cfg.mesh.nx = cells;
  cfg.mesh.ny = cells;
  const auto mesh = build_mesh(cfg);
  Stepper stepper(mesh, cfg.degree, cfg.physics, cfg.time, cfg.solver);
  SimulationState s = stepper.initialize(cfg.initial);
  const long n = cfg.time.num_steps();
  while (s.k < n) {
    stepper.step(s);
    record_div((stepper.operators().D * s.u_half.coeffs).cwiseAbs().maxCoeff());
  }
  const double t = (static_cast<double>(n) + 0.5) * cfg.time.dt;
  const double decay = std::exp(-2.0 * cfg.physics.nu * t);
  return std::sqrt(l2_error_squared(s.u_half, VectorFn([&](const Point& p) {
                                      return Vec2(std::sin(p.x) * std::cos(p.y) * decay,
                                                  -std::cos(p.x) * std::sin(p.y) * decay);
                                    }),
                                    6));
}

void criterion5() {
  const auto t0 = Clock::now();
  const double e16 = taylor_green_error(16);
  const double e32 = taylor_green_error(32);
  const double secs = seconds_since(t0);
  const double ratio = e16 / e32;
  report(5, ratio >= 1.7 && secs < 300.0,
         fmt("L2 error 16x16 %.4e, 32x32 %.4e, ratio %.3f, time=%.1fs", e16, e32, ratio, secs));
}

// ---------------------------------------------------------------------------

struct LockRun {
  std::vector<LedgerRow> rows;
  double mass_defect = 0.0;      // max |mass change + dt u_s int_bottom phi_mid|
  double eres_defect = 0.0;      // max |E_res - (dt/2)(b^k - b^0)|
  double Ep0 = 0.0;
  double seconds = 0.0;
  fs::path dir;
  std::string csv;
};

/// Lock-exchange run through the driver, with per-step checks against vectors
/// assembled independently of the ledger.
LockRun lock_run(double dt, const fs::path& dir) {
  RunConfig cfg = load_config(source_path("configs/lock_exchange.cfg"));
  cfg.time.dt = dt;
  cfg.output.vtk_every = 0;
  const auto mesh = build_mesh(cfg);
  Stepper probe_stepper(mesh, cfg.degree, cfg.physics, cfg.time, cfg.solver);
  EnergyLedger probe(probe_stepper);
  const SpacePtr& Phi = probe_stepper.spaces().Phi;
  const Vector ones_int = Phi->basis_integrals();
  const Vector bottom = assemble_boundary_load(*Phi, BoundaryTag::Bottom);
  const double us = cfg.physics.settling_velocity;

  LockRun out;
  out.dir = dir;
  double b0 = 0.0;
  RunHooks hooks;
  hooks.output_dir = dir.string();
  hooks.on_step = [&](const SimulationState& s, const LedgerRow& row, const StepReport&) {
    if (s.k == 1) {
      b0 = assemble_buoyancy(s.phi_prev, *s.u_half.space).dot(s.u_prev_half.coeffs);
      out.Ep0 = probe.potential_energy(s.phi_prev);
    }
    const double change = ones_int.dot(s.phi.coeffs - s.phi_prev.coeffs);
    const double flux = dt * us * bottom.dot(0.5 * (s.phi.coeffs + s.phi_prev.coeffs));
    out.mass_defect = std::max(out.mass_defect, std::abs(change + flux));
    const double bk = assemble_buoyancy(s.phi, *s.u_half.space).dot(s.u_half.coeffs);
    out.eres_defect = std::max(out.eres_defect, std::abs(row.E_res - 0.5 * dt * (bk - b0)));
    record_div(row.div_inf);
  };
  fs::remove_all(dir);
  const auto t0 = Clock::now();
  RunResult res = run(cfg, hooks);
  out.seconds = seconds_since(t0);
  out.rows = std::move(res.rows);
  out.csv = res.csv_path;
  return out;
}

double max_abs_eres(const std::vector<LedgerRow>& rows, std::size_t from, std::size_t to) {
  double m = 0.0;
  for (std::size_t i = from; i < to; ++i) m = std::max(m, std::abs(rows[i].E_res));
  return m;
}

void lock_exchange_criteria(const fs::path& scratch) {
  const LockRun a = lock_run(1e-3, scratch / "run_a");
  const auto& rows = a.rows;

  // 6
  bool monotone = true;
  for (std::size_t i = 1; i < rows.size(); ++i) monotone = monotone && rows[i].m_p_ratio <= rows[i - 1].m_p_ratio;
  report(6, rows.size() == 1000 && a.mass_defect <= 1e-10 && monotone && a.seconds < 900.0,
         fmt("steps %zu, max mass identity defect %.3e, m_p_ratio monotone %s (final %.8f), time=%.1fs", rows.size(),
             a.mass_defect, monotone ? "yes" : "no", rows.back().m_p_ratio, a.seconds));

  // 7
  const LockRun b = lock_run(2e-3, scratch / "run_dt2");
  const double m1 = max_abs_eres(rows, 0, rows.size());
  const double m2 = max_abs_eres(b.rows, 0, b.rows.size());
  const double ratio = m2 / m1;
  const double first = max_abs_eres(rows, 0, rows.size() / 2);
  const double second = max_abs_eres(rows, rows.size() / 2, rows.size());
  report(7,
         a.eres_defect <= 1e-9 && b.eres_defect <= 1e-9 && ratio >= 1.4 && ratio <= 3.0 && second <= 2.0 * first,
         fmt("identity defect %.3e / %.3e, max|E_res| dt %.4e 2dt %.4e ratio %.3f, halves %.4e -> %.4e (%.3f)",
             a.eres_defect, b.eres_defect, m1, m2, ratio, first, second, second / first));

  // 8
  bool front_moves = true;
  long front_pairs = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i - 1].t > 0.5) {
      ++front_pairs;
      front_moves = front_moves && rows[i].x_f > rows[i - 1].x_f;
    }
  bool settling = true;
  for (const auto& r : rows) settling = settling && r.mdot_s <= 0.0;
  const LedgerRow& last = rows.back();
  report(8, front_moves && front_pairs > 0 && last.Ep < a.Ep0 && last.K > 0.0 && settling,
         fmt("x_f increasing for t>0.5 %s (x_f(0.5)=%.4f, x_f(1)=%.4f), Ep %.6e -> %.6e, K(1)=%.4e, mdot_s<=0 %s",
             front_moves ? "yes" : "no", rows[499].x_f, last.x_f, a.Ep0, last.Ep, last.K, settling ? "yes" : "no"));

  // 9
  const LockRun repeat = lock_run(1e-3, scratch / "run_b");
  const std::string csv_a = slurp(a.csv);
  const bool same = csv_a == slurp(repeat.csv);
  const fs::path resumed = scratch / "run_resumed";
  fs::remove_all(resumed);
  fs::create_directories(resumed);
  fs::copy_file(a.dir / "diagnostics.csv", resumed / "diagnostics.csv");
  RunConfig cfg = load_config(source_path("configs/lock_exchange.cfg"));
  cfg.output.vtk_every = 0;
  RunHooks hooks;
  hooks.output_dir = resumed.string();
  hooks.on_step = [](const SimulationState&, const LedgerRow& row, const StepReport&) { record_div(row.div_inf); };
  const RunResult r = resume(cfg, (a.dir / checkpoint_name(500)).string(), hooks);
  const bool resume_same = slurp(r.csv_path) == csv_a;
  const bool chk_same = slurp(r.last_checkpoint) == slurp(a.dir / checkpoint_name(1000));
  report(9, same && resume_same && chk_same,
         fmt("repeat CSV identical %s, resumed CSV identical %s, final checkpoint identical %s",
             same ? "yes" : "no", resume_same ? "yes" : "no", chk_same ? "yes" : "no"));
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path scratch = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "meevc_acceptance";
  try {
    criterion1();
    criterion2();
    criterion4();
    criterion5();
    lock_exchange_criteria(scratch);
    report(3, max_div <= 1e-10, fmt("max |D u| = %.3e over %ld velocity solves", max_div, div_samples));
  } catch (const std::exception& e) {
    for (const auto& [id, line] : results) std::printf("criterion %d: %s\n", id, line.c_str());
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
  for (const auto& [id, line] : results) std::printf("criterion %d: %s\n", id, line.c_str());
  fs::remove_all(scratch);
  std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
