/// @file config.hpp
/// @brief Run configuration: sectioned `key = value` text with `#` comments.
///
///   [mesh]            kind (channel|periodic), length, height, lock_length, nx, ny,
///                     pattern (left|right|crisscross), import
///   [physics]         mode (turbidity|homogeneous), grashof, schmidt, settling_velocity, nu
///   [discretization]  degree
///   [time]            dt, t_end, startup_tol, startup_max_iter
///   [initial]         interface_width, velocity (zero|taylor_green|random), seed
///   [solver]          strategy (lu|cg), tolerance
///   [output]          dir, csv_every, vtk_every, checkpoint_every
///   [diagnostics]     front_threshold, front_columns
///   [flags]           literal_top_wall_sign
///
/// The mesh and time sections are mandatory. Unknown sections or keys are errors.

#pragma once

#include <memory>
#include <string>

#include "meevc/diagnostics.hpp"
#include "meevc/mesh.hpp"
#include "meevc/stepper.hpp"

namespace meevc {

enum class MeshKind { Channel, Periodic };

struct MeshConfig {
  MeshKind kind = MeshKind::Channel;
  ChannelGeometry geometry;  // length/height double as the periods of a periodic mesh
  int nx = 0;
  int ny = 0;
  DiagonalPattern pattern = DiagonalPattern::Left;
  std::string import_path;  // channel meshes only; resolved against the config directory
};

struct OutputConfig {
  std::string dir = "output";
  long csv_every = 1;
  long vtk_every = 0;         // 0 disables snapshots
  long checkpoint_every = 0;  // 0: final checkpoint only
};

struct RunConfig {
  MeshConfig mesh;
  PhysicsConfig physics;
  int degree = 2;
  TimeConfig time;
  InitialCondition initial;
  SolverConfig solver;
  OutputConfig output;
  FrontOptions front;
  bool literal_top_wall_sign = false;
  std::string base_dir = ".";  // directory of the config file
};

/// Parses and validates. Errors are ConfigError with "line N:" or "section.key:" prefixes.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Builds (or reads) the mesh described by the config.
std::shared_ptr<const Mesh> build_mesh(const RunConfig& config);

}  // namespace meevc
