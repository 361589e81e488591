/// @file mesh.hpp
/// @brief Triangulations of the lock-exchange channel and of periodic rectangles.
///
/// A mesh keeps two vertex numberings. Geometric points carry coordinates and are
/// what cells reference for their shape. Topological vertices are points after
/// periodic identification; edges, orientations and degrees of freedom are built
/// on them. On non-periodic meshes the two coincide.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace meevc {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Parts of the channel boundary: top wall, right end, bottom wall, left end.
enum class BoundaryTag : std::uint8_t { None = 0, Top = 1, Right = 2, Bottom = 3, Left = 4 };

const char* to_string(BoundaryTag tag);

enum class DiagonalPattern { Left, Right, Crisscross };

DiagonalPattern parse_pattern(const std::string& name);
const char* to_string(DiagonalPattern pattern);

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Channel [-lock_length, length - lock_length] x [0, height]; the lock sits left of x = 0.
struct ChannelGeometry {
  double length = 13.0;
  double height = 1.0;
  double lock_length = 1.0;

  double x_min() const { return -lock_length; }
  double x_max() const { return length - lock_length; }
  void validate() const;
};

struct MeshStats {
  std::size_t vertices = 0;
  std::size_t edges = 0;
  std::size_t cells = 0;
  double h_min = 0.0;
  double h_max = 0.0;
  double total_area = 0.0;

  long euler_characteristic() const {
    return static_cast<long>(vertices) - static_cast<long>(edges) + static_cast<long>(cells);
  }
};

/// Location of a physical point: containing cell and reference coordinates.
struct CellPoint {
  std::size_t cell = 0;
  Point ref;
};

class Mesh {
 public:
  using Index = std::size_t;
  static constexpr Index kNone = static_cast<Index>(-1);

  /// Local edge i runs from local vertex kEdgeVertices[i][0] to kEdgeVertices[i][1].
  static constexpr std::array<std::array<int, 2>, 3> kEdgeVertices{{{1, 2}, {0, 2}, {0, 1}}};

  /// Builds topology from counter-clockwise-or-not triangles. Clockwise cells are
  /// reoriented, degenerate ones rejected. When `tagging` is given every boundary
  /// edge must lie on one side of the channel.
  static Mesh from_cells(std::vector<Point> points, std::vector<std::array<Index, 3>> cells,
                         const std::optional<ChannelGeometry>& tagging);

  /// Periodic variant: `point_vertex` identifies geometric points, `period` is (lx, ly)
  /// and `origin` the lower-left corner of the fundamental domain.
  static Mesh from_periodic_cells(std::vector<Point> points,
                                  std::vector<std::array<Index, 3>> cells,
                                  std::vector<Index> point_vertex, Point origin,
                                  std::array<double, 2> period);

  Index num_points() const { return points_.size(); }
  Index num_vertices() const { return num_vertices_; }
  Index num_edges() const { return edge_vertices_.size(); }
  Index num_cells() const { return cells_.size(); }

  const Point& point(Index p) const { return points_[p]; }
  Index vertex_of_point(Index p) const { return point_vertex_[p]; }

  const std::array<Index, 3>& cell_points(Index c) const { return cells_[c]; }
  std::array<Index, 3> cell_vertices(Index c) const;
  std::array<Point, 3> cell_coords(Index c) const;
  double cell_area(Index c) const;

  const std::array<Index, 3>& cell_edges(Index c) const { return cell_edges_[c]; }
  /// +1 when local edge direction agrees with the global lower-to-higher vertex rule.
  const std::array<int, 3>& cell_edge_signs(Index c) const { return cell_edge_signs_[c]; }

  const std::array<Index, 2>& edge_vertices(Index e) const { return edge_vertices_[e]; }
  /// Adjacent cells; the second entry is kNone on boundary edges.
  const std::array<Index, 2>& edge_cells(Index e) const { return edge_cells_[e]; }
  /// Local index of edge e inside its first adjacent cell.
  int edge_local_index(Index e) const { return edge_local_[e]; }
  bool is_boundary_edge(Index e) const { return edge_cells_[e][1] == kNone; }
  BoundaryTag edge_tag(Index e) const { return edge_tags_[e]; }
  double edge_length(Index e) const;
  /// Boundary edges carrying `tag`, in edge order.
  std::vector<Index> boundary_edges(BoundaryTag tag) const;
  bool has_boundary() const;

  bool periodic() const { return periodic_; }
  std::array<double, 2> period() const { return period_; }
  const std::optional<ChannelGeometry>& channel() const { return channel_; }

  Point bbox_min() const { return bbox_min_; }
  Point bbox_max() const { return bbox_max_; }

  /// Finds a cell containing `x` (wrapped into the fundamental domain when periodic).
  std::optional<CellPoint> locate(Point x, double tol = 1e-10) const;

 private:
  Mesh() = default;
  void build_topology();
  void build_locator();

  std::vector<Point> points_;
  std::vector<std::array<Index, 3>> cells_;
  std::vector<Index> point_vertex_;
  Index num_vertices_ = 0;

  std::vector<std::array<Index, 3>> cell_edges_;
  std::vector<std::array<int, 3>> cell_edge_signs_;
  std::vector<std::array<Index, 2>> edge_vertices_;
  std::vector<std::array<Index, 2>> edge_cells_;
  std::vector<int> edge_local_;
  std::vector<BoundaryTag> edge_tags_;

  bool periodic_ = false;
  std::array<double, 2> period_{0.0, 0.0};
  Point origin_;
  std::optional<ChannelGeometry> channel_;
  Point bbox_min_, bbox_max_;

  // uniform bucket grid over the bounding box for point location
  std::size_t grid_nx_ = 1, grid_ny_ = 1;
  std::vector<std::vector<Index>> grid_;
};

Mesh build_channel_mesh(const ChannelGeometry& geom, int nx, int ny, DiagonalPattern pattern);

/// Rectangle [0, lx] x [0, ly] with opposite sides identified.
Mesh build_periodic_rect_mesh(double lx, double ly, int nx, int ny,
                              DiagonalPattern pattern = DiagonalPattern::Left);

MeshStats mesh_stats(const Mesh& mesh);

/// Plain-text mesh: header `V E C`, V lines `x y`, C lines `v0 v1 v2`.
/// Boundary tags are inferred from `geom` with tolerance 1e-9.
Mesh read_mesh(std::istream& in, const ChannelGeometry& geom);
Mesh read_mesh_file(const std::string& path, const ChannelGeometry& geom);
void write_mesh(std::ostream& out, const Mesh& mesh);

}  // namespace meevc
