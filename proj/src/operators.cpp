#include "meevc/operators.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <string>

namespace meevc {

namespace {

void require_same_mesh(const FunctionSpace& a, const FunctionSpace& b, const char* what) {
  if (&a.mesh() != &b.mesh())
    throw OperatorError(std::string(what) + ": spaces live on different meshes");
}

void require_family(const FunctionSpace& s, Family f, const char* what) {
  if (s.family() != f)
    throw OperatorError(std::string(what) + ": expected a " + to_string(f) + " space, got " +
                        to_string(s.family()));
}

void require_field_space(const Field& field, Family f, const char* what) {
  if (!field.space) throw OperatorError(std::string(what) + ": field has no space");
  require_family(*field.space, f, what);
  if (static_cast<std::size_t>(field.coeffs.size()) != field.space->dim())
    throw OperatorError(std::string(what) + ": coefficient length mismatch");
}

Eigen::VectorXd local_coeffs(const Field& f, Mesh::Index cell) {
  const auto dofs = f.space->cell_dofs(cell);
  Eigen::VectorXd v(static_cast<Eigen::Index>(dofs.size()));
  for (std::size_t i = 0; i < dofs.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = f.coeffs[static_cast<Eigen::Index>(dofs[i])];
  return v;
}

void scatter(const FunctionSpace& s, Mesh::Index cell, const Eigen::VectorXd& local, Vector& out) {
  const auto dofs = s.cell_dofs(cell);
  for (std::size_t i = 0; i < dofs.size(); ++i)
    out[static_cast<Eigen::Index>(dofs[i])] += local[static_cast<Eigen::Index>(i)];
}

/// Reference tabulations of one or two spaces at the volume rule of a given degree.
struct VolumeRule {
  const QuadratureRule& rule;
  explicit VolumeRule(int degree) : rule(quadrature_rule(std::clamp(degree, 1, kMaxQuadratureDegree))) {}

  ReferenceTabulation tabulate(const FunctionSpace& s) const { return s.reference().tabulate(rule.points); }

  Eigen::VectorXd weights(double det) const {
    Eigen::VectorXd w(static_cast<Eigen::Index>(rule.size()));
    for (std::size_t q = 0; q < rule.size(); ++q) w[static_cast<Eigen::Index>(q)] = rule.weights[q] * det;
    return w;
  }
};

int volume_degree(const FunctionSpace& s) { return QuadratureOrders::for_degree(s.degree()).volume; }

/// Quadrature on one boundary edge, expressed in the reference coordinates of its cell.
struct EdgeQuadrature {
  Mesh::Index cell = 0;
  std::vector<Point> ref_points;
  Eigen::VectorXd weights;
  Vec2 normal;
};

Vec2 outward_normal(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::Top: return {0.0, 1.0};
    case BoundaryTag::Bottom: return {0.0, -1.0};
    case BoundaryTag::Left: return {-1.0, 0.0};
    case BoundaryTag::Right: return {1.0, 0.0};
    case BoundaryTag::None: break;
  }
  throw OperatorError("boundary edge without tag");
}

EdgeQuadrature edge_quadrature(const Mesh& mesh, Mesh::Index edge, int npoints) {
  static const std::array<Point, 3> ref{{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}};
  const LineRule& line = gauss_legendre(npoints);
  EdgeQuadrature eq;
  eq.cell = mesh.edge_cells(edge)[0];
  const int le = mesh.edge_local_index(edge);
  const Point a = ref[static_cast<std::size_t>(Mesh::kEdgeVertices[static_cast<std::size_t>(le)][0])];
  const Point b = ref[static_cast<std::size_t>(Mesh::kEdgeVertices[static_cast<std::size_t>(le)][1])];
  const double length = mesh.edge_length(edge);
  eq.weights.resize(static_cast<Eigen::Index>(line.points.size()));
  for (std::size_t q = 0; q < line.points.size(); ++q) {
    const double s = line.points[q];
    eq.ref_points.push_back({a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)});
    eq.weights[static_cast<Eigen::Index>(q)] = line.weights[q] * length;
  }
  eq.normal = outward_normal(mesh.edge_tag(edge));
  return eq;
}

std::vector<Mesh::Index> tagged_edges(const Mesh& mesh, std::initializer_list<BoundaryTag> tags) {
  std::vector<Mesh::Index> out;
  for (Mesh::Index e = 0; e < mesh.num_edges(); ++e) {
    if (!mesh.is_boundary_edge(e)) continue;
    if (std::find(tags.begin(), tags.end(), mesh.edge_tag(e)) != tags.end()) out.push_back(e);
  }
  return out;
}

// Kernels -----------------------------------------------------------------------

SparseMatrix mass_kernel(const FunctionSpace& s, const Pattern& pat) {
  const VolumeRule vr(volume_degree(s));
  const ReferenceTabulation ref = vr.tabulate(s);
  SparseMatrix A = pat.zero();
  CellTabulation tab;
  for (Mesh::Index c = 0; c < s.mesh().num_cells(); ++c) {
    s.map_tabulation(ref, vr.rule.points, c, tab);
    const Eigen::VectorXd w = vr.weights(tab.det);
    Eigen::MatrixXd local = tab.value.transpose() * w.asDiagonal() * tab.value;
    if (s.is_vector()) local += tab.value_y.transpose() * w.asDiagonal() * tab.value_y;
    // the product is symmetric only up to rounding; make it exact
    pat.add(c, 0.5 * (local + local.transpose()), A);
  }
  return A;
}

SparseMatrix stiffness_kernel(const FunctionSpace& s, const Pattern& pat) {
  const VolumeRule vr(volume_degree(s));
  const ReferenceTabulation ref = vr.tabulate(s);
  SparseMatrix A = pat.zero();
  CellTabulation tab;
  for (Mesh::Index c = 0; c < s.mesh().num_cells(); ++c) {
    s.map_tabulation(ref, vr.rule.points, c, tab);
    const Eigen::VectorXd w = vr.weights(tab.det);
    const Eigen::MatrixXd local =
        tab.dx.transpose() * w.asDiagonal() * tab.dx + tab.dy.transpose() * w.asDiagonal() * tab.dy;
    pat.add(c, 0.5 * (local + local.transpose()), A);
  }
  return A;
}

RotationForms rotation_kernel(const Field& omega, const FunctionSpace& U, const Pattern& pat) {
  const FunctionSpace& W = *omega.space;
  const VolumeRule vr(volume_degree(U));
  const ReferenceTabulation ru = vr.tabulate(U), rw = vr.tabulate(W);
  RotationForms out{pat.zero(), Vector::Zero(static_cast<Eigen::Index>(U.dim()))};
  CellTabulation tu, tw;
  for (Mesh::Index c = 0; c < U.mesh().num_cells(); ++c) {
    U.map_tabulation(ru, vr.rule.points, c, tu);
    W.map_tabulation(rw, vr.rule.points, c, tw);
    const Eigen::VectorXd wl = local_coeffs(omega, c);
    const Eigen::VectorXd w = vr.weights(tu.det);
    const Eigen::VectorXd ww = w.cwiseProduct(tw.value * wl);
    const Eigen::MatrixXd a = tu.value_y.transpose() * ww.asDiagonal() * tu.value;
    const Eigen::MatrixXd local = a - a.transpose();
    pat.add(c, local, out.R);
    const Eigen::VectorXd wy = w.cwiseProduct(tw.dy * wl), wx = w.cwiseProduct(tw.dx * wl);
    scatter(U, c, tu.value.transpose() * wy - tu.value_y.transpose() * wx, out.l);
  }
  return out;
}

Vector viscous_kernel(const Field& omega, const FunctionSpace& U) {
  const FunctionSpace& W = *omega.space;
  const VolumeRule vr(volume_degree(U));
  const ReferenceTabulation ru = vr.tabulate(U), rw = vr.tabulate(W);
  Vector out = Vector::Zero(static_cast<Eigen::Index>(U.dim()));
  CellTabulation tu, tw;
  for (Mesh::Index c = 0; c < U.mesh().num_cells(); ++c) {
    U.map_tabulation(ru, vr.rule.points, c, tu);
    W.map_tabulation(rw, vr.rule.points, c, tw);
    const Eigen::VectorXd wl = local_coeffs(omega, c);
    const Eigen::VectorXd w = vr.weights(tu.det);
    const Eigen::VectorXd wy = w.cwiseProduct(tw.dy * wl), wx = w.cwiseProduct(tw.dx * wl);
    scatter(U, c, tu.value.transpose() * wy - tu.value_y.transpose() * wx, out);
  }
  return out;
}

SparseMatrix convection_kernel(const Field& u, const FunctionSpace& W, const Pattern& pat) {
  const FunctionSpace& U = *u.space;
  const VolumeRule vr(volume_degree(W));
  const ReferenceTabulation ru = vr.tabulate(U), rw = vr.tabulate(W);
  SparseMatrix A = pat.zero();
  CellTabulation tu, tw;
  for (Mesh::Index c = 0; c < W.mesh().num_cells(); ++c) {
    U.map_tabulation(ru, vr.rule.points, c, tu);
    W.map_tabulation(rw, vr.rule.points, c, tw);
    const Eigen::VectorXd ul = local_coeffs(u, c);
    const Eigen::VectorXd ux = tu.value * ul, uy = tu.value_y * ul, du = tu.div * ul;
    const Eigen::VectorXd w = vr.weights(tw.det);
    // G(q, i) = u . grad w_i + w_i div u
    const Eigen::MatrixXd g = ux.asDiagonal() * tw.dx + uy.asDiagonal() * tw.dy + du.asDiagonal() * tw.value;
    pat.add(c, g.transpose() * w.asDiagonal() * tw.value, A);
  }
  return A;
}

SparseMatrix particle_kernel(const Field& u, const FunctionSpace& Phi, double u_s, bool literal,
                             const Pattern& pat) {
  const FunctionSpace& U = *u.space;
  const Mesh& mesh = Phi.mesh();
  const VolumeRule vr(volume_degree(Phi));
  const ReferenceTabulation ru = vr.tabulate(U), rp = vr.tabulate(Phi);
  SparseMatrix A = pat.zero();
  CellTabulation tu, tp;
  for (Mesh::Index c = 0; c < mesh.num_cells(); ++c) {
    U.map_tabulation(ru, vr.rule.points, c, tu);
    Phi.map_tabulation(rp, vr.rule.points, c, tp);
    const Eigen::VectorXd ul = local_coeffs(u, c);
    const Eigen::VectorXd px = tu.value * ul;
    const Eigen::VectorXd py = (tu.value_y * ul).array() - u_s;
    const Eigen::VectorXd du = tu.div * ul;
    const Eigen::VectorXd w = vr.weights(tp.det);
    // T(i, j) = int zeta_i (u_p . grad phi_j + phi_j div u_p)
    const Eigen::MatrixXd g = px.asDiagonal() * tp.dx + py.asDiagonal() * tp.dy + du.asDiagonal() * tp.value;
    const Eigen::MatrixXd t = tp.value.transpose() * w.asDiagonal() * g;
    pat.add(c, 0.5 * (t - t.transpose()), A);
  }
  if (u_s != 0.0) {
    const int npts = QuadratureOrders::for_degree(Phi.degree()).boundary_points;
    CellTabulation tb;
    for (Mesh::Index e : tagged_edges(mesh, {BoundaryTag::Top, BoundaryTag::Bottom})) {
      const EdgeQuadrature eq = edge_quadrature(mesh, e, npts);
      const double coef = (mesh.edge_tag(e) == BoundaryTag::Top && literal) ? -0.5 * u_s : 0.5 * u_s;
      tb = Phi.tabulate(eq.cell, eq.ref_points, false);
      pat.add(eq.cell, coef * (tb.value.transpose() * eq.weights.asDiagonal() * tb.value), A);
    }
  }
  return A;
}

Vector buoyancy_kernel(const Field& phi, const FunctionSpace& U) {
  const FunctionSpace& S = *phi.space;
  const VolumeRule vr(volume_degree(U));
  const ReferenceTabulation ru = vr.tabulate(U), rs = vr.tabulate(S);
  Vector out = Vector::Zero(static_cast<Eigen::Index>(U.dim()));
  CellTabulation tu, ts;
  for (Mesh::Index c = 0; c < U.mesh().num_cells(); ++c) {
    U.map_tabulation(ru, vr.rule.points, c, tu);
    S.map_tabulation(rs, vr.rule.points, c, ts);
    const Eigen::VectorXd f = vr.weights(tu.det).cwiseProduct(ts.value * local_coeffs(phi, c));
    scatter(U, c, -(tu.value_y.transpose() * f), out);
  }
  return out;
}

Vector baroclinic_kernel(const Field& phi, const FunctionSpace& W) {
  const FunctionSpace& S = *phi.space;
  const VolumeRule vr(volume_degree(W));
  const ReferenceTabulation rw = vr.tabulate(W), rs = vr.tabulate(S);
  Vector out = Vector::Zero(static_cast<Eigen::Index>(W.dim()));
  CellTabulation tw, ts;
  for (Mesh::Index c = 0; c < W.mesh().num_cells(); ++c) {
    W.map_tabulation(rw, vr.rule.points, c, tw);
    S.map_tabulation(rs, vr.rule.points, c, ts);
    const Eigen::VectorXd f = vr.weights(tw.det).cwiseProduct(ts.dx * local_coeffs(phi, c));
    scatter(W, c, -(tw.value.transpose() * f), out);
  }
  return out;
}

Vector curl_h_kernel(const Field& u, const FunctionSpace& W) {
  const FunctionSpace& U = *u.space;
  const VolumeRule vr(volume_degree(W));
  const ReferenceTabulation ru = vr.tabulate(U), rw = vr.tabulate(W);
  Vector out = Vector::Zero(static_cast<Eigen::Index>(W.dim()));
  CellTabulation tu, tw;
  for (Mesh::Index c = 0; c < W.mesh().num_cells(); ++c) {
    U.map_tabulation(ru, vr.rule.points, c, tu);
    W.map_tabulation(rw, vr.rule.points, c, tw);
    const Eigen::VectorXd ul = local_coeffs(u, c);
    const Eigen::VectorXd w = vr.weights(tw.det);
    const Eigen::VectorXd ux = w.cwiseProduct(tu.value * ul), uy = w.cwiseProduct(tu.value_y * ul);
    scatter(W, c, tw.dy.transpose() * ux - tw.dx.transpose() * uy, out);
  }
  return out;
}

Vector neumann_kernel(const Field& wt, const FunctionSpace& W) {
  const Mesh& mesh = W.mesh();
  const FunctionSpace& S = *wt.space;
  Vector out = Vector::Zero(static_cast<Eigen::Index>(W.dim()));
  const int npts = QuadratureOrders::for_degree(W.degree()).boundary_points;
  for (Mesh::Index e : tagged_edges(mesh, {BoundaryTag::Top, BoundaryTag::Bottom})) {
    const EdgeQuadrature eq = edge_quadrature(mesh, e, npts);
    const CellTabulation ts = S.tabulate(eq.cell, eq.ref_points, false);
    const CellTabulation tw = W.tabulate(eq.cell, eq.ref_points, false);
    const Eigen::VectorXd wl = local_coeffs(wt, eq.cell);
    const Eigen::VectorXd dn = eq.normal.x() * (ts.dx * wl) + eq.normal.y() * (ts.dy * wl);
    scatter(W, eq.cell, tw.value.transpose() * eq.weights.cwiseProduct(dn), out);
  }
  return out;
}

void check_scalar_cg(const FunctionSpace& s, const char* what) {
  if (s.family() == Family::RT) throw OperatorError(std::string(what) + ": scalar space required");
}

}  // namespace

// ---------------------------------------------------------------------------

Pattern::Pattern(const FunctionSpace& test, const FunctionSpace& trial) {
  require_same_mesh(test, trial, "pattern");
  const Mesh& mesh = test.mesh();
  test_local_ = test.local_dim();
  trial_local_ = trial.local_dim();
  std::vector<std::vector<Eigen::Index>> cols(test.dim());
  for (Mesh::Index c = 0; c < mesh.num_cells(); ++c) {
    const auto ti = test.cell_dofs(c);
    const auto tj = trial.cell_dofs(c);
    for (auto i : ti)
      for (auto j : tj) cols[i].push_back(static_cast<Eigen::Index>(j));
  }
  Eigen::VectorXi nnz(static_cast<Eigen::Index>(test.dim()));
  for (std::size_t i = 0; i < cols.size(); ++i) {
    auto& row = cols[i];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    nnz[static_cast<Eigen::Index>(i)] = static_cast<int>(row.size());
  }
  structure_.resize(static_cast<Eigen::Index>(test.dim()), static_cast<Eigen::Index>(trial.dim()));
  structure_.reserve(nnz);
  for (std::size_t i = 0; i < cols.size(); ++i)
    for (auto j : cols[i]) structure_.insert(static_cast<Eigen::Index>(i), j) = 0.0;
  structure_.makeCompressed();

  const auto* outer = structure_.outerIndexPtr();
  const auto* inner = structure_.innerIndexPtr();
  slots_.resize(mesh.num_cells() * static_cast<std::size_t>(test_local_ * trial_local_));
  std::size_t k = 0;
  for (Mesh::Index c = 0; c < mesh.num_cells(); ++c) {
    const auto ti = test.cell_dofs(c);
    const auto tj = trial.cell_dofs(c);
    for (auto i : ti) {
      const auto* first = inner + outer[i];
      const auto* last = inner + outer[i + 1];
      for (auto j : tj) {
        const auto* it = std::lower_bound(first, last, static_cast<int>(j));
        slots_[k++] = it - inner;
      }
    }
  }
}

void Pattern::add(Mesh::Index cell, const Eigen::MatrixXd& local, SparseMatrix& A) const {
  double* values = A.valuePtr();
  const Eigen::Index* slot = slots_.data() + cell * static_cast<std::size_t>(test_local_ * trial_local_);
  for (Eigen::Index i = 0; i < test_local_; ++i)
    for (Eigen::Index j = 0; j < trial_local_; ++j) values[*slot++] += local(i, j);
}

QuadratureOrders QuadratureOrders::for_degree(int degree) {
  QuadratureOrders q;
  q.volume = std::min(2 * degree + 2, kMaxQuadratureDegree);
  q.boundary_points = degree + 2;
  return q;
}

SparseMatrix assemble_mass(const FunctionSpace& space) { return mass_kernel(space, Pattern(space, space)); }

SparseMatrix assemble_div(const FunctionSpace& U, const FunctionSpace& Q) {
  require_family(U, Family::RT, "divergence");
  require_family(Q, Family::DG, "divergence");
  require_same_mesh(U, Q, "divergence");
  if (U.degree() != Q.degree())
    throw OperatorError("divergence: RT_N pairs with DG_{N-1} (space indices must match)");
  const Pattern pat(Q, U);
  const VolumeRule vr(volume_degree(U));
  const ReferenceTabulation ru = vr.tabulate(U), rq = vr.tabulate(Q);
  SparseMatrix D = pat.zero();
  CellTabulation tu, tq;
  for (Mesh::Index c = 0; c < U.mesh().num_cells(); ++c) {
    U.map_tabulation(ru, vr.rule.points, c, tu);
    Q.map_tabulation(rq, vr.rule.points, c, tq);
    pat.add(c, tq.value.transpose() * vr.weights(tu.det).asDiagonal() * tu.div, D);
  }
  return D;
}

SparseMatrix assemble_curlcurl(const FunctionSpace& W) {
  check_scalar_cg(W, "curl-curl");
  return stiffness_kernel(W, Pattern(W, W));
}

RotationForms assemble_rotation(const Field& omega, const FunctionSpace& U) {
  require_field_space(omega, Family::CG, "rotation");
  require_family(U, Family::RT, "rotation");
  require_same_mesh(*omega.space, U, "rotation");
  return rotation_kernel(omega, U, Pattern(U, U));
}

SparseMatrix assemble_vorticity_convection(const Field& u, const FunctionSpace& W) {
  require_field_space(u, Family::RT, "vorticity convection");
  require_family(W, Family::CG, "vorticity convection");
  require_same_mesh(*u.space, W, "vorticity convection");
  return convection_kernel(u, W, Pattern(W, W));
}

SparseMatrix skew_convection(const SparseMatrix& W) {
  SparseMatrix wt = W.transpose();
  return 0.5 * (wt - W);
}

SparseMatrix assemble_particle_convection(const Field& u, const FunctionSpace& Phi, double u_s,
                                          bool literal_top_wall_sign) {
  require_field_space(u, Family::RT, "particle convection");
  require_family(Phi, Family::CG, "particle convection");
  require_same_mesh(*u.space, Phi, "particle convection");
  if (u_s < 0.0) throw OperatorError("particle convection: settling velocity must be non-negative");
  if (!Phi.mesh().channel()) throw OperatorError("particle convection: mesh has no wall tags");
  return particle_kernel(u, Phi, u_s, literal_top_wall_sign, Pattern(Phi, Phi));
}

Vector assemble_buoyancy(const Field& phi, const FunctionSpace& U) {
  require_field_space(phi, Family::CG, "buoyancy");
  require_family(U, Family::RT, "buoyancy");
  require_same_mesh(*phi.space, U, "buoyancy");
  return buoyancy_kernel(phi, U);
}

Vector assemble_baroclinic(const Field& phi, const FunctionSpace& W) {
  require_field_space(phi, Family::CG, "baroclinic");
  require_family(W, Family::CG, "baroclinic");
  require_same_mesh(*phi.space, W, "baroclinic");
  return baroclinic_kernel(phi, W);
}

Vector assemble_curl_h_rhs(const Field& u, const FunctionSpace& W) {
  require_field_space(u, Family::RT, "curl_h");
  require_family(W, Family::CG, "curl_h");
  require_same_mesh(*u.space, W, "curl_h");
  return curl_h_kernel(u, W);
}

Vector assemble_vorticity_neumann(const Field& omega_tilde, const FunctionSpace& W) {
  require_field_space(omega_tilde, Family::CG, "vorticity Neumann");
  require_family(W, Family::CG, "vorticity Neumann");
  require_same_mesh(*omega_tilde.space, W, "vorticity Neumann");
  if (!W.mesh().channel()) throw OperatorError("vorticity Neumann: mesh has no wall tags");
  return neumann_kernel(omega_tilde, W);
}

Vector assemble_boundary_load(const FunctionSpace& S, BoundaryTag tag) {
  check_scalar_cg(S, "boundary load");
  const Mesh& mesh = S.mesh();
  Vector out = Vector::Zero(static_cast<Eigen::Index>(S.dim()));
  const int npts = QuadratureOrders::for_degree(S.degree()).boundary_points;
  for (Mesh::Index e : tagged_edges(mesh, {tag})) {
    const EdgeQuadrature eq = edge_quadrature(mesh, e, npts);
    const CellTabulation t = S.tabulate(eq.cell, eq.ref_points, false);
    scatter(S, eq.cell, t.value.transpose() * eq.weights, out);
  }
  return out;
}

Vector assemble_derivative_load(const FunctionSpace& S, int component) {
  check_scalar_cg(S, "derivative load");
  if (component != 0 && component != 1) throw OperatorError("derivative load: component must be 0 or 1");
  const VolumeRule vr(volume_degree(S));
  const ReferenceTabulation ref = vr.tabulate(S);
  Vector out = Vector::Zero(static_cast<Eigen::Index>(S.dim()));
  CellTabulation t;
  for (Mesh::Index c = 0; c < S.mesh().num_cells(); ++c) {
    S.map_tabulation(ref, vr.rule.points, c, t);
    const Eigen::MatrixXd& d = component == 0 ? t.dx : t.dy;
    scatter(S, c, d.transpose() * vr.weights(t.det), out);
  }
  return out;
}

double boundary_gradient_flux(const Field& f, const ScalarFn& weight) {
  if (!f.space || f.space->is_vector()) throw OperatorError("boundary flux: scalar field required");
  const FunctionSpace& S = *f.space;
  const Mesh& mesh = S.mesh();
  const int npts = QuadratureOrders::for_degree(S.degree()).boundary_points;
  double total = 0.0;
  for (Mesh::Index e : tagged_edges(mesh, {BoundaryTag::Top, BoundaryTag::Right, BoundaryTag::Bottom,
                                           BoundaryTag::Left})) {
    const EdgeQuadrature eq = edge_quadrature(mesh, e, npts);
    const CellTabulation t = S.tabulate(eq.cell, eq.ref_points, false);
    const Eigen::VectorXd fl = local_coeffs(f, eq.cell);
    const Eigen::VectorXd dn = eq.normal.x() * (t.dx * fl) + eq.normal.y() * (t.dy * fl);
    for (Eigen::Index q = 0; q < dn.size(); ++q)
      total += eq.weights[q] * weight(t.physical[static_cast<std::size_t>(q)]) * dn[q];
  }
  return total;
}

// ---------------------------------------------------------------------------

OperatorSet::OperatorSet(SpacePtr U, SpacePtr W, SpacePtr Q, SpacePtr Phi, bool literal_top_wall_sign)
    : U_(std::move(U)),
      W_(std::move(W)),
      Q_(std::move(Q)),
      Phi_(std::move(Phi)),
      literal_(literal_top_wall_sign),
      uu_(*U_, *U_),
      ww_(*W_, *W_) {
  require_family(*U_, Family::RT, "operator set");
  require_family(*W_, Family::CG, "operator set");
  require_family(*Q_, Family::DG, "operator set");
  require_same_mesh(*U_, *W_, "operator set");
  if (U_->degree() != W_->degree()) throw OperatorError("operator set: CG and RT indices differ");
  if (Phi_) {
    require_family(*Phi_, Family::CG, "operator set");
    require_same_mesh(*Phi_, *W_, "operator set");
    if (Phi_->degree() != W_->degree())
      throw OperatorError("operator set: concentration space must match the vorticity space");
  }
  M = mass_kernel(*U_, uu_);
  N = mass_kernel(*W_, ww_);
  L = stiffness_kernel(*W_, ww_);
  D = assemble_div(*U_, *Q_);
  P = D.transpose();
  w_integrals = W_->basis_integrals();
  q_integrals = Q_->basis_integrals();
  dy_load = assemble_derivative_load(*W_, 1);
  y_coeffs = interpolate(W_, ScalarFn([](const Point& p) { return p.y; })).coeffs;
  if (W_->mesh().channel()) {
    bottom_load = assemble_boundary_load(*W_, BoundaryTag::Bottom);
    top_load = assemble_boundary_load(*W_, BoundaryTag::Top);
  } else {
    bottom_load = Vector::Zero(static_cast<Eigen::Index>(W_->dim()));
    top_load = bottom_load;
  }
}

RotationForms OperatorSet::rotation(const Field& omega) const {
  require_field_space(omega, Family::CG, "rotation");
  return rotation_kernel(omega, *U_, uu_);
}

Vector OperatorSet::viscous_load(const Field& omega) const {
  require_field_space(omega, Family::CG, "viscous load");
  return viscous_kernel(omega, *U_);
}

SparseMatrix OperatorSet::vorticity_convection(const Field& u) const {
  require_field_space(u, Family::RT, "vorticity convection");
  return convection_kernel(u, *W_, ww_);
}

SparseMatrix OperatorSet::particle_convection(const Field& u, double u_s) const {
  if (!Phi_) throw OperatorError("particle convection: no concentration space");
  require_field_space(u, Family::RT, "particle convection");
  if (u_s < 0.0) throw OperatorError("particle convection: settling velocity must be non-negative");
  if (!Phi_->mesh().channel()) throw OperatorError("particle convection: mesh has no wall tags");
  return particle_kernel(u, *Phi_, u_s, literal_, ww_);
}

Vector OperatorSet::buoyancy(const Field& phi) const {
  require_field_space(phi, Family::CG, "buoyancy");
  return buoyancy_kernel(phi, *U_);
}

Vector OperatorSet::baroclinic(const Field& phi) const {
  require_field_space(phi, Family::CG, "baroclinic");
  return baroclinic_kernel(phi, *W_);
}

Vector OperatorSet::curl_h_rhs(const Field& u) const {
  require_field_space(u, Family::RT, "curl_h");
  return curl_h_kernel(u, *W_);
}

Vector OperatorSet::vorticity_neumann(const Field& omega_tilde) const {
  require_field_space(omega_tilde, Family::CG, "vorticity Neumann");
  if (!W_->mesh().channel()) throw OperatorError("vorticity Neumann: mesh has no wall tags");
  return neumann_kernel(omega_tilde, *W_);
}

}  // namespace meevc
