/// @file io.hpp
/// @brief Diagnostics CSV, legacy VTK snapshots and lossless checkpoints.

#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include "meevc/diagnostics.hpp"
#include "meevc/stepper.hpp"

namespace meevc {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Decimal text with 17 significant digits.
std::string format_value(double v);
/// Shortest text that reads back to the same double.
std::string format_exact(double v);
double parse_exact(const std::string& text);

/// Appends ledger rows; every row is flushed so a crash leaves a complete prefix.
class CsvWriter {
 public:
  /// Creates the file with a header line, or with `append` keeps the existing content.
  CsvWriter(const std::string& path, bool append);
  void write(const LedgerRow& row);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
};

std::string csv_header();
std::string csv_line(const LedgerRow& row);

/// Keeps the header and the rows with step <= k.
void truncate_csv(const std::string& path, long k);

/// Legacy ASCII VTK of the triangulation with vertex values of the scalar fields,
/// cell-mean pressure and centroid velocity. Velocity is sampled at centroids because
/// the tangential component of an RT field jumps across edges.
void write_vtk(const std::string& path, const SimulationState& state, double t);

struct Checkpoint {
  SimulationState state;
  double t = 0.0;
  LedgerTotals totals;
};

/// Text checkpoint with a versioned header and every coefficient in shortest
/// round-trip form.
void write_checkpoint(const std::string& path, const SimulationState& state, double t,
                      const LedgerTotals& totals);
/// Reads a checkpoint into fields on the stepper's spaces. Dimension, degree or mode
/// mismatches are errors.
Checkpoint read_checkpoint(const std::string& path, const Stepper& stepper);

}  // namespace meevc
