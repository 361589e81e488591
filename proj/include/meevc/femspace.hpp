/// @file femspace.hpp
/// @brief Conforming spaces CG_N, RT_N and DG_{N-1} on triangles.
///
/// The three families form the chain CG_N --curl--> RT_N --div--> DG_{N-1}.
/// Reference bases are built by inverting the degree-of-freedom matrix over a
/// monomial basis, so any degree up to kMaxTabulatedDegree can be tabulated.
/// CG and DG are mapped by plain pullback, RT by the contravariant Piola map.
///
/// Global conventions:
///  - CG: vertex values, then N-1 Lagrange nodes per edge ordered along the global
///    edge direction (lower to higher vertex), then interior nodes.
///  - RT: per edge, normal moments against shifted Legendre polynomials in the
///    global edge parameter, normal = clockwise rotation of the global tangent;
///    then N(N-1) interior moments per cell. RT_1 is the lowest-order space with
///    the normalization  int_e phi . n = 1.
///  - DG: cellwise Lagrange nodes (the centroid for degree 0).

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "meevc/mesh.hpp"
#include "meevc/quadrature.hpp"

namespace meevc {

enum class Family { CG, RT, DG };

const char* to_string(Family family);

class SpaceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxTabulatedDegree = 4;

using Vec2 = Eigen::Vector2d;
using Vector = Eigen::VectorXd;

/// Closed-form dimension of a space of index N (CG_N, RT_N, DG_{N-1}) on a
/// mesh with V vertices, E edges and C cells.
std::size_t dof_count(Family family, int degree, std::size_t vertices, std::size_t edges,
                      std::size_t cells);

/// Cell count scaled to a length-19 channel with each cell split into N^2 pieces.
double equivalent_cells(std::size_t cells, int degree);

/// Basis functions on the reference triangle, tabulated at reference points.
/// Matrices are (points x basis functions).
struct ReferenceTabulation {
  Eigen::MatrixXd value;    // scalar value or x component
  Eigen::MatrixXd value_y;  // y component (RT)
  Eigen::MatrixXd d_xi;     // d/dxi (CG, DG)
  Eigen::MatrixXd d_eta;    // d/deta (CG, DG)
  Eigen::MatrixXd div;      // divergence (RT)
};

class ReferenceElement {
 public:
  ReferenceElement(Family family, int degree);

  Family family() const { return family_; }
  int degree() const { return degree_; }
  int num_dofs() const { return num_dofs_; }
  int dofs_per_vertex() const { return per_vertex_; }
  int dofs_per_edge() const { return per_edge_; }
  int dofs_interior() const { return interior_; }

  ReferenceTabulation tabulate(std::span<const Point> points) const;

  /// Lagrange nodes (CG, DG) in local dof order.
  const std::vector<Point>& nodes() const { return nodes_; }

 private:
  Family family_;
  int degree_;
  int num_dofs_ = 0;
  int per_vertex_ = 0, per_edge_ = 0, interior_ = 0;
  int poly_degree_ = 0;
  std::vector<std::array<int, 2>> monomials_;
  Eigen::MatrixXd coeff_x_;  // (monomials x dofs); scalar families use only this one
  Eigen::MatrixXd coeff_y_;
  std::vector<Point> nodes_;
};

/// Affine map x = v0 + J xi of one cell.
struct CellMap {
  Point origin;
  Eigen::Matrix2d jacobian;
  Eigen::Matrix2d inverse;
  double det = 0.0;

  static CellMap of(const Mesh& mesh, Mesh::Index cell);
  Point to_physical(const Point& ref) const;
  Point to_reference(const Point& x) const;
};

/// Physical basis values of one cell at a set of points; (points x local dofs).
struct CellTabulation {
  Eigen::MatrixXd value;
  Eigen::MatrixXd value_y;
  Eigen::MatrixXd dx;
  Eigen::MatrixXd dy;
  Eigen::MatrixXd div;
  std::vector<Point> physical;
  double det = 0.0;
};

class FunctionSpace {
 public:
  using Index = Mesh::Index;

  /// `constrained` lists boundary parts on which the space is restricted to zero:
  /// the function itself for CG, the normal component for RT.
  FunctionSpace(std::shared_ptr<const Mesh> mesh, Family family, int degree,
                std::vector<BoundaryTag> constrained = {});

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  Family family() const { return family_; }
  /// The space index N: CG_N, RT_N, or DG_{N-1}.
  int degree() const { return degree_; }
  /// Polynomial degree of the members (N, N, N-1).
  int polynomial_degree() const { return family_ == Family::DG ? degree_ - 1 : degree_; }
  bool is_vector() const { return family_ == Family::RT; }
  std::size_t dim() const { return dim_; }
  int local_dim() const { return reference_.num_dofs(); }
  const ReferenceElement& reference() const { return reference_; }

  std::span<const Index> cell_dofs(Index cell) const;
  /// Orientation factors (+1/-1) of the cell's local basis; all +1 for CG, DG.
  std::span<const double> cell_signs(Index cell) const;

  const std::vector<BoundaryTag>& constrained_tags() const { return constrained_tags_; }
  bool is_constrained(Index dof) const { return free_index_[dof] < 0; }
  std::size_t num_free() const { return free_dofs_.size(); }
  /// global dof -> reduced index, or -1 when constrained.
  const std::vector<long>& free_index() const { return free_index_; }
  const std::vector<Index>& free_dofs() const { return free_dofs_; }

  /// Dofs supported on a boundary edge (CG: endpoint and edge nodes, RT: normal moments).
  std::vector<Index> edge_dofs(Index edge) const;

  /// Maps a reference tabulation to physical basis values on `cell`.
  void map_tabulation(const ReferenceTabulation& ref, std::span<const Point> ref_points,
                      Index cell, CellTabulation& out) const;

  /// Tabulates at reference points; with `strict`, points outside the reference triangle throw.
  CellTabulation tabulate(Index cell, std::span<const Point> ref_points, bool strict = true) const;

  /// Integral of each basis function over the domain (scalar families).
  Vector basis_integrals() const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  Family family_;
  int degree_;
  ReferenceElement reference_;
  std::size_t dim_ = 0;
  std::vector<Index> dofs_;     // cells x local_dim
  std::vector<double> signs_;   // cells x local_dim
  std::vector<BoundaryTag> constrained_tags_;
  std::vector<long> free_index_;
  std::vector<Index> free_dofs_;
};

using SpacePtr = std::shared_ptr<const FunctionSpace>;

SpacePtr make_space(std::shared_ptr<const Mesh> mesh, Family family, int degree,
                    std::vector<BoundaryTag> constrained = {});

/// Coefficient vector bound to a space.
struct Field {
  SpacePtr space;
  Vector coeffs;

  Field() = default;
  explicit Field(SpacePtr s);
  Field(SpacePtr s, Vector c);

  /// Zeroes constrained coefficients.
  void apply_constraints();
};

using ScalarFn = std::function<double(const Point&)>;
using VectorFn = std::function<Vec2(const Point&)>;
/// Piecewise-defined vector function, evaluated from inside a given cell.
using CellVectorFn = std::function<Vec2(Mesh::Index, const Point&)>;

/// L2 projection onto the space (respecting constrained dofs).
Field project(const SpacePtr& space, const ScalarFn& fn);
Field project(const SpacePtr& space, const VectorFn& fn);

/// Canonical interpolation: nodal values for CG/DG, normal and interior moments for RT.
Field interpolate(const SpacePtr& space, const ScalarFn& fn);
Field interpolate(const SpacePtr& space, const VectorFn& fn);
Field interpolate(const SpacePtr& space, const CellVectorFn& fn);

/// Values at a physical point; throws SpaceError when the point is outside the mesh.
double evaluate_scalar(const Field& field, const Point& x);
Vec2 evaluate_vector(const Field& field, const Point& x);
double evaluate_scalar_in_cell(const Field& field, Mesh::Index cell, const Point& ref);
Vec2 evaluate_vector_in_cell(const Field& field, Mesh::Index cell, const Point& ref);
/// Gradient of a CG/DG field inside a cell.
Vec2 evaluate_gradient_in_cell(const Field& field, Mesh::Index cell, const Point& ref);

/// Squared L2 norm of (field - exact), integrated cellwise with a rule of the given degree.
double l2_error_squared(const Field& field, const VectorFn& exact, int degree);
double l2_error_squared(const Field& field, const CellVectorFn& exact, int degree);
double l2_error_squared(const Field& field, const ScalarFn& exact, int degree);

}  // namespace meevc
