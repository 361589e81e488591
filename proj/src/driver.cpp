#include "meevc/driver.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "meevc/io.hpp"

namespace meevc {

namespace fs = std::filesystem;

std::string checkpoint_name(long k) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "checkpoint_%06ld.chk", k);
  return buf;
}

namespace {

std::string vtk_name(long k) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "fields_%06ld.vtk", k);
  return buf;
}

struct Session {
  RunConfig config;
  std::shared_ptr<const Mesh> mesh;
  std::unique_ptr<Stepper> stepper;
  std::unique_ptr<EnergyLedger> ledger;
  fs::path out_dir;

  Session(const RunConfig& cfg, const std::string& dir_override) : config(cfg) {
    mesh = build_mesh(config);
    stepper = std::make_unique<Stepper>(mesh, config.degree, config.physics, config.time, config.solver,
                                        config.literal_top_wall_sign);
    ledger = std::make_unique<EnergyLedger>(*stepper, config.front);
    out_dir = dir_override.empty() ? fs::path(config.output.dir) : fs::path(dir_override);
  }

  void loop(SimulationState& state, CsvWriter& csv, RunResult& result, const RunHooks& hooks) {
    const OutputConfig& out = config.output;
    const long n = config.time.num_steps();
    while (state.k < n) {
      const StepReport rep = stepper->step(state);
      const LedgerRow row = ledger->update(state);
      result.rows.push_back(row);
      if (state.k % out.csv_every == 0 || state.k == n) csv.write(row);
      if (out.vtk_every > 0 && state.k % out.vtk_every == 0)
        write_vtk((out_dir / vtk_name(state.k)).string(), state, row.t);
      if ((out.checkpoint_every > 0 && state.k % out.checkpoint_every == 0) || state.k == n) {
        result.last_checkpoint = (out_dir / checkpoint_name(state.k)).string();
        write_checkpoint(result.last_checkpoint, state, row.t, ledger->totals());
      }
      if (hooks.on_step) hooks.on_step(state, row, rep);
    }
  }
};

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

}  // namespace

RunResult run(const RunConfig& config, const RunHooks& hooks) {
  Session s(config, hooks.output_dir);
  make_dir(s.out_dir);
  RunResult result;
  result.csv_path = (s.out_dir / "diagnostics.csv").string();
  CsvWriter csv(result.csv_path, false);

  result.state = s.stepper->initialize(config.initial, &result.startup);
  s.ledger->start(result.state);
  if (config.output.vtk_every > 0) write_vtk((s.out_dir / vtk_name(0)).string(), result.state, 0.0);
  s.loop(result.state, csv, result, hooks);
  return result;
}

RunResult resume(const RunConfig& config, const std::string& checkpoint_path, const RunHooks& hooks) {
  Session s(config, hooks.output_dir);
  Checkpoint cp = read_checkpoint(checkpoint_path, *s.stepper);
  const long n = config.time.num_steps();
  if (cp.state.k > n)
    throw ConfigError("checkpoint step " + std::to_string(cp.state.k) + " lies beyond time.t_end (" +
                      std::to_string(n) + " steps)");
  make_dir(s.out_dir);
  RunResult result;
  result.csv_path = (s.out_dir / "diagnostics.csv").string();
  if (fs::exists(result.csv_path)) {
    truncate_csv(result.csv_path, cp.state.k);
  } else {
    CsvWriter fresh(result.csv_path, false);
  }
  CsvWriter csv(result.csv_path, true);
  s.ledger->restore(cp.totals);
  result.state = std::move(cp.state);
  s.loop(result.state, csv, result, hooks);
  return result;
}

StartupReport check(const RunConfig& config) {
  RunConfig c = config;
  c.time.startup_max_iter = 1;
  const auto mesh = build_mesh(c);
  Stepper stepper(mesh, c.degree, c.physics, c.time, c.solver, c.literal_top_wall_sign);
  SimulationState state = stepper.initial_fields(c.initial);
  const StartupReport rep = stepper.startup(state, false);
  if (stepper.physics().mode == Mode::Turbidity) FrontTracker(*stepper.spaces().Phi, c.front);
  return rep;
}

MeshInfo mesh_info(const RunConfig& config) {
  const auto mesh = build_mesh(config);
  MeshInfo info;
  info.stats = mesh_stats(*mesh);
  info.degree = config.degree;
  const MeshStats& st = info.stats;
  info.dofs_W = dof_count(Family::CG, config.degree, st.vertices, st.edges, st.cells);
  info.dofs_U = dof_count(Family::RT, config.degree, st.vertices, st.edges, st.cells);
  info.dofs_Q = dof_count(Family::DG, config.degree, st.vertices, st.edges, st.cells);
  info.equivalent_cells = equivalent_cells(st.cells, config.degree);
  return info;
}

std::string format_mesh_info(const MeshInfo& m) {
  std::ostringstream o;
  char eq[32];
  std::snprintf(eq, sizeof eq, "%.2e", m.equivalent_cells);
  o << "vertices            " << m.stats.vertices << '\n'
    << "edges               " << m.stats.edges << '\n'
    << "cells               " << m.stats.cells << '\n'
    << "euler_characteristic " << m.stats.euler_characteristic() << '\n'
    << "h_min               " << m.stats.h_min << '\n'
    << "h_max               " << m.stats.h_max << '\n'
    << "area                " << m.stats.total_area << '\n'
    << "N                   " << m.degree << '\n'
    << "d_W                 " << m.dofs_W << '\n'
    << "d_U                 " << m.dofs_U << '\n'
    << "d_Q                 " << m.dofs_Q << '\n'
    << "eq_cells            " << eq << '\n';
  return o.str();
}

}  // namespace meevc
