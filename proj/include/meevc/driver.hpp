/// @file driver.hpp
/// @brief Run orchestration: startup, time loop, CSV rows, snapshots and checkpoints.
///
/// Files written under the output directory:
///   diagnostics.csv          one row per step (every csv_every steps)
///   fields_<k>.vtk           every vtk_every steps
///   checkpoint_<k>.chk       every checkpoint_every steps and after the final step

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "meevc/config.hpp"
#include "meevc/diagnostics.hpp"
#include "meevc/stepper.hpp"

namespace meevc {

using StepObserver = std::function<void(const SimulationState&, const LedgerRow&, const StepReport&)>;

struct RunHooks {
  StepObserver on_step;
  /// Overrides the output directory of the config when non-empty.
  std::string output_dir;
};

struct RunResult {
  SimulationState state;
  std::vector<LedgerRow> rows;  // rows of the steps taken by this call
  StartupReport startup;
  std::string csv_path;
  std::string last_checkpoint;
};

RunResult run(const RunConfig& config, const RunHooks& hooks = {});

/// Continues from a checkpoint to time.t_end. The CSV is cut back to the checkpoint
/// step and appended to.
RunResult resume(const RunConfig& config, const std::string& checkpoint_path, const RunHooks& hooks = {});

/// Builds mesh, spaces and operators and performs one startup iteration. Writes nothing.
StartupReport check(const RunConfig& config);

struct MeshInfo {
  MeshStats stats;
  int degree = 0;
  std::size_t dofs_W = 0, dofs_U = 0, dofs_Q = 0;
  double equivalent_cells = 0.0;
};

/// Closed-form DOF counts; valid for any degree, no spaces are built.
MeshInfo mesh_info(const RunConfig& config);
std::string format_mesh_info(const MeshInfo& info);

std::string checkpoint_name(long k);

}  // namespace meevc
