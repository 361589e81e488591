// Command-line front end: run, resume, check, mesh-info.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "meevc/driver.hpp"

namespace {

void progress(const meevc::SimulationState&, const meevc::LedgerRow& row, const meevc::StepReport&) {
  if (row.step % 100 != 0) return;
  std::fprintf(stderr, "step %ld  t %.4f  K %.6e  E_res %.3e  x_f %.5f\n", row.step, row.t, row.K, row.E_res,
               row.x_f);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structure-preserving finite element solver for lock-exchange turbidity currents"};
  app.require_subcommand(1);

  std::string config_path, output_dir, checkpoint;
  bool quiet = false;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration file")->required()->check(CLI::ExistingFile);
  };

  CLI::App* run = app.add_subcommand("run", "initialize and integrate to time.t_end");
  add_common(run);
  run->add_option("--output-dir", output_dir, "overrides output.dir");
  run->add_flag("--quiet", quiet, "no progress lines");

  CLI::App* resume = app.add_subcommand("resume", "continue from a checkpoint to time.t_end");
  add_common(resume);
  resume->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  resume->add_option("--output-dir", output_dir, "overrides output.dir");
  resume->add_flag("--quiet", quiet, "no progress lines");

  CLI::App* check = app.add_subcommand("check", "validate the config and perform one startup iteration");
  add_common(check);

  CLI::App* info = app.add_subcommand("mesh-info", "mesh statistics and DOF counts");
  add_common(info);

  CLI11_PARSE(app, argc, argv);

  try {
    const meevc::RunConfig cfg = meevc::load_config(config_path);
    meevc::RunHooks hooks;
    hooks.output_dir = output_dir;
    if (!quiet) hooks.on_step = progress;
    if (run->parsed()) {
      const auto res = meevc::run(cfg, hooks);
      std::cout << "startup iterations " << res.startup.iterations << '\n'
                << "steps " << res.rows.size() << '\n'
                << "csv " << res.csv_path << '\n'
                << "checkpoint " << res.last_checkpoint << '\n';
    } else if (resume->parsed()) {
      const auto res = meevc::resume(cfg, checkpoint, hooks);
      std::cout << "steps " << res.rows.size() << '\n'
                << "csv " << res.csv_path << '\n'
                << "checkpoint " << res.last_checkpoint << '\n';
    } else if (check->parsed()) {
      const auto rep = meevc::check(cfg);
      std::cout << "config ok; startup iteration update " << rep.last_update << '\n';
    } else if (info->parsed()) {
      std::cout << meevc::format_mesh_info(meevc::mesh_info(cfg));
    }
  } catch (const std::exception& e) {
    std::cerr << "meevc: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
