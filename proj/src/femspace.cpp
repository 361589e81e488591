#include "meevc/femspace.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace meevc {

namespace {

std::vector<std::array<int, 2>> monomials_up_to(int degree) {
  std::vector<std::array<int, 2>> out;
  for (int total = 0; total <= degree; ++total)
    for (int b = 0; b <= total; ++b) out.push_back({total - b, b});
  return out;
}

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

/// Rows: points; columns: monomials. Fills values and first derivatives.
void monomial_table(std::span<const Point> pts, const std::vector<std::array<int, 2>>& mono,
                    Eigen::MatrixXd& v, Eigen::MatrixXd& dx, Eigen::MatrixXd& dy) {
  const auto np = static_cast<Eigen::Index>(pts.size());
  const auto nm = static_cast<Eigen::Index>(mono.size());
  v.resize(np, nm);
  dx.resize(np, nm);
  dy.resize(np, nm);
  for (Eigen::Index i = 0; i < np; ++i) {
    const double x = pts[static_cast<std::size_t>(i)].x, y = pts[static_cast<std::size_t>(i)].y;
    for (Eigen::Index m = 0; m < nm; ++m) {
      const auto [a, b] = mono[static_cast<std::size_t>(m)];
      v(i, m) = ipow(x, a) * ipow(y, b);
      dx(i, m) = a > 0 ? a * ipow(x, a - 1) * ipow(y, b) : 0.0;
      dy(i, m) = b > 0 ? b * ipow(x, a) * ipow(y, b - 1) : 0.0;
    }
  }
}

/// Shifted Legendre polynomial P_j(2s - 1).
double legendre01(int j, double s) {
  const double x = 2.0 * s - 1.0;
  double p0 = 1.0, p1 = x;
  if (j == 0) return p0;
  for (int k = 2; k <= j; ++k) {
    const double pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  return p1;
}

const std::array<Point, 3> kRefVertices{{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}};

int triangle_quadrature_degree(int wanted) { return std::clamp(wanted, 1, kMaxQuadratureDegree); }

}  // namespace

const char* to_string(Family family) {
  switch (family) {
    case Family::CG: return "CG";
    case Family::RT: return "RT";
    case Family::DG: return "DG";
  }
  return "?";
}

std::size_t dof_count(Family family, int degree, std::size_t vertices, std::size_t edges,
                      std::size_t cells) {
  if (degree < 1) throw SpaceError("space index N must be at least 1");
  const auto n = static_cast<std::size_t>(degree);
  switch (family) {
    case Family::CG: return vertices + (n - 1) * edges + (n - 1) * (n - 2) / 2 * cells;
    case Family::RT: return n * edges + n * (n - 1) * cells;
    case Family::DG: return n * (n + 1) / 2 * cells;
  }
  return 0;
}

double equivalent_cells(std::size_t cells, int degree) {
  return static_cast<double>(cells) * 19.0 / 13.0 * degree * degree;
}

// ---------------------------------------------------------------------------
// Reference element
// ---------------------------------------------------------------------------

ReferenceElement::ReferenceElement(Family family, int degree) : family_(family), degree_(degree) {
  if (degree < 1) throw SpaceError("space index N must be at least 1");
  if (degree > kMaxTabulatedDegree) {
    std::ostringstream msg;
    msg << "basis tabulation for " << to_string(family) << " with N = " << degree
        << " is not supported (N <= " << kMaxTabulatedDegree << ")";
    throw SpaceError(msg.str());
  }
  const int n = degree;

  if (family == Family::CG || family == Family::DG) {
    poly_degree_ = family == Family::CG ? n : n - 1;
    monomials_ = monomials_up_to(poly_degree_);
    if (family == Family::CG) {
      per_vertex_ = 1;
      per_edge_ = n - 1;
      interior_ = (n - 1) * (n - 2) / 2;
      for (const Point& v : kRefVertices) nodes_.push_back(v);
      for (const auto& ev : Mesh::kEdgeVertices) {
        const Point a = kRefVertices[static_cast<std::size_t>(ev[0])];
        const Point b = kRefVertices[static_cast<std::size_t>(ev[1])];
        for (int i = 1; i < n; ++i) {
          const double t = static_cast<double>(i) / n;
          nodes_.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
        }
      }
      for (int j = 1; j < n; ++j)
        for (int i = 1; i + j < n; ++i)
          nodes_.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
    } else {
      const int d = poly_degree_;
      interior_ = (d + 1) * (d + 2) / 2;
      if (d == 0) {
        nodes_.push_back({1.0 / 3.0, 1.0 / 3.0});
      } else {
        for (int j = 0; j <= d; ++j)
          for (int i = 0; i + j <= d; ++i)
            nodes_.push_back({static_cast<double>(i) / d, static_cast<double>(j) / d});
      }
    }
    num_dofs_ = static_cast<int>(nodes_.size());
    Eigen::MatrixXd v, dx, dy;
    monomial_table(nodes_, monomials_, v, dx, dy);
    coeff_x_ = v.fullPivLu().inverse();
    return;
  }

  // Raviart-Thomas: [P_{N-1}]^2 + x P~_{N-1}, described over monomials of degree <= N.
  poly_degree_ = n;
  monomials_ = monomials_up_to(n);
  per_edge_ = n;
  interior_ = n * (n - 1);
  num_dofs_ = 3 * n + interior_;
  auto mono_index = [&](int a, int b) {
    const auto it = std::find(monomials_.begin(), monomials_.end(), std::array<int, 2>{a, b});
    return static_cast<Eigen::Index>(it - monomials_.begin());
  };
  const auto nm = static_cast<Eigen::Index>(monomials_.size());
  Eigen::MatrixXd gx = Eigen::MatrixXd::Zero(nm, num_dofs_);
  Eigen::MatrixXd gy = Eigen::MatrixXd::Zero(nm, num_dofs_);
  Eigen::Index g = 0;
  for (const auto& [a, b] : monomials_up_to(n - 1)) gx(mono_index(a, b), g++) = 1.0;
  for (const auto& [a, b] : monomials_up_to(n - 1)) gy(mono_index(a, b), g++) = 1.0;
  for (int b = 0; b <= n - 1; ++b) {
    const int a = n - 1 - b;
    gx(mono_index(a + 1, b), g) = 1.0;
    gy(mono_index(a, b + 1), g) = 1.0;
    ++g;
  }

  // dof matrix A(i, j) = dof_i(generator_j)
  Eigen::MatrixXd dofs = Eigen::MatrixXd::Zero(num_dofs_, num_dofs_);
  const LineRule& line = gauss_legendre(n + 2);
  Eigen::Index row = 0;
  for (const auto& ev : Mesh::kEdgeVertices) {
    const Point a = kRefVertices[static_cast<std::size_t>(ev[0])];
    const Point b = kRefVertices[static_cast<std::size_t>(ev[1])];
    const Vec2 normal_ds(b.y - a.y, -(b.x - a.x));
    std::vector<Point> pts;
    for (double s : line.points) pts.push_back({a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)});
    Eigen::MatrixXd v, dx, dy;
    monomial_table(pts, monomials_, v, dx, dy);
    const Eigen::MatrixXd vx = v * gx, vy = v * gy;
    for (int j = 0; j < n; ++j, ++row) {
      for (std::size_t q = 0; q < line.points.size(); ++q) {
        const double wq = line.weights[q] * legendre01(j, line.points[q]);
        const auto qi = static_cast<Eigen::Index>(q);
        dofs.row(row) += wq * (vx.row(qi) * normal_ds.x() + vy.row(qi) * normal_ds.y());
      }
    }
  }
  if (n >= 2) {
    const QuadratureRule& rule = quadrature_rule(triangle_quadrature_degree(2 * n));
    Eigen::MatrixXd v, dx, dy;
    monomial_table(rule.points, monomials_, v, dx, dy);
    const Eigen::MatrixXd vx = v * gx, vy = v * gy;
    const auto moments = monomials_up_to(n - 2);
    for (int comp = 0; comp < 2; ++comp) {
      for (const auto& [a, b] : moments) {
        for (std::size_t q = 0; q < rule.size(); ++q) {
          const auto qi = static_cast<Eigen::Index>(q);
          const double m = ipow(rule.points[q].x, a) * ipow(rule.points[q].y, b);
          dofs.row(row) += rule.weights[q] * m * (comp == 0 ? vx.row(qi) : vy.row(qi));
        }
        ++row;
      }
    }
  }
  const Eigen::MatrixXd inv = dofs.fullPivLu().inverse();
  coeff_x_ = gx * inv;
  coeff_y_ = gy * inv;
}

ReferenceTabulation ReferenceElement::tabulate(std::span<const Point> points) const {
  Eigen::MatrixXd v, dx, dy;
  monomial_table(points, monomials_, v, dx, dy);
  ReferenceTabulation t;
  t.value = v * coeff_x_;
  if (family_ == Family::RT) {
    t.value_y = v * coeff_y_;
    t.div = dx * coeff_x_ + dy * coeff_y_;
  } else {
    t.d_xi = dx * coeff_x_;
    t.d_eta = dy * coeff_x_;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Cell map
// ---------------------------------------------------------------------------

CellMap CellMap::of(const Mesh& mesh, Mesh::Index cell) {
  const auto v = mesh.cell_coords(cell);
  CellMap m;
  m.origin = v[0];
  m.jacobian << v[1].x - v[0].x, v[2].x - v[0].x, v[1].y - v[0].y, v[2].y - v[0].y;
  m.det = m.jacobian.determinant();
  m.inverse = m.jacobian.inverse();
  return m;
}

Point CellMap::to_physical(const Point& ref) const {
  return {origin.x + jacobian(0, 0) * ref.x + jacobian(0, 1) * ref.y,
          origin.y + jacobian(1, 0) * ref.x + jacobian(1, 1) * ref.y};
}

Point CellMap::to_reference(const Point& x) const {
  const double dx = x.x - origin.x, dy = x.y - origin.y;
  return {inverse(0, 0) * dx + inverse(0, 1) * dy, inverse(1, 0) * dx + inverse(1, 1) * dy};
}

// ---------------------------------------------------------------------------
// Function space
// ---------------------------------------------------------------------------

FunctionSpace::FunctionSpace(std::shared_ptr<const Mesh> mesh, Family family, int degree,
                             std::vector<BoundaryTag> constrained)
    : mesh_(std::move(mesh)),
      family_(family),
      degree_(degree),
      reference_(family, degree),
      constrained_tags_(std::move(constrained)) {
  const Mesh& m = *mesh_;
  const std::size_t nv = m.num_vertices(), ne = m.num_edges(), nc = m.num_cells();
  dim_ = dof_count(family, degree, nv, ne, nc);
  const auto nloc = static_cast<std::size_t>(reference_.num_dofs());
  dofs_.assign(nc * nloc, 0);
  signs_.assign(nc * nloc, 1.0);
  const int n = degree;

  for (Index c = 0; c < nc; ++c) {
    Index* d = &dofs_[c * nloc];
    double* s = &signs_[c * nloc];
    const auto& edges = m.cell_edges(c);
    const auto& esign = m.cell_edge_signs(c);
    std::size_t k = 0;
    switch (family) {
      case Family::CG: {
        const auto verts = m.cell_vertices(c);
        for (int i = 0; i < 3; ++i) d[k++] = verts[static_cast<std::size_t>(i)];
        const auto per_edge = static_cast<std::size_t>(n - 1);
        for (int le = 0; le < 3; ++le) {
          const auto e = edges[static_cast<std::size_t>(le)];
          for (std::size_t i = 0; i < per_edge; ++i) {
            const std::size_t pos = esign[static_cast<std::size_t>(le)] > 0 ? i : per_edge - 1 - i;
            d[k++] = nv + e * per_edge + pos;
          }
        }
        const auto interior = static_cast<std::size_t>(reference_.dofs_interior());
        for (std::size_t i = 0; i < interior; ++i) d[k++] = nv + per_edge * ne + c * interior + i;
        break;
      }
      case Family::RT: {
        const auto per_edge = static_cast<std::size_t>(n);
        for (int le = 0; le < 3; ++le) {
          const auto e = edges[static_cast<std::size_t>(le)];
          const int sigma = esign[static_cast<std::size_t>(le)];
          for (std::size_t j = 0; j < per_edge; ++j) {
            s[k] = sigma > 0 ? 1.0 : (j % 2 == 0 ? -1.0 : 1.0);
            d[k++] = e * per_edge + j;
          }
        }
        const auto interior = static_cast<std::size_t>(reference_.dofs_interior());
        for (std::size_t i = 0; i < interior; ++i) d[k++] = per_edge * ne + c * interior + i;
        break;
      }
      case Family::DG: {
        for (std::size_t i = 0; i < nloc; ++i) d[k++] = c * nloc + i;
        break;
      }
    }
  }

  std::vector<bool> constrained_dof(dim_, false);
  if (!constrained_tags_.empty()) {
    if (family == Family::DG) throw SpaceError("DG spaces carry no boundary constraints");
    for (Index e = 0; e < ne; ++e) {
      if (!m.is_boundary_edge(e)) continue;
      const BoundaryTag tag = m.edge_tag(e);
      if (std::find(constrained_tags_.begin(), constrained_tags_.end(), tag) ==
          constrained_tags_.end())
        continue;
      for (Index dof : edge_dofs(e)) constrained_dof[dof] = true;
    }
  }
  free_index_.assign(dim_, -1);
  for (Index i = 0; i < dim_; ++i) {
    if (constrained_dof[i]) continue;
    free_index_[i] = static_cast<long>(free_dofs_.size());
    free_dofs_.push_back(i);
  }
}

std::span<const FunctionSpace::Index> FunctionSpace::cell_dofs(Index cell) const {
  const auto nloc = static_cast<std::size_t>(reference_.num_dofs());
  return {dofs_.data() + cell * nloc, nloc};
}

std::span<const double> FunctionSpace::cell_signs(Index cell) const {
  const auto nloc = static_cast<std::size_t>(reference_.num_dofs());
  return {signs_.data() + cell * nloc, nloc};
}

std::vector<FunctionSpace::Index> FunctionSpace::edge_dofs(Index edge) const {
  const Mesh& m = *mesh_;
  std::vector<Index> out;
  switch (family_) {
    case Family::CG: {
      const auto& v = m.edge_vertices(edge);
      out.push_back(v[0]);
      out.push_back(v[1]);
      const auto per_edge = static_cast<Index>(degree_ - 1);
      for (Index i = 0; i < per_edge; ++i) out.push_back(m.num_vertices() + edge * per_edge + i);
      break;
    }
    case Family::RT:
      for (Index j = 0; j < static_cast<Index>(degree_); ++j)
        out.push_back(edge * static_cast<Index>(degree_) + j);
      break;
    case Family::DG: break;
  }
  return out;
}

void FunctionSpace::map_tabulation(const ReferenceTabulation& ref,
                                   std::span<const Point> ref_points, Index cell,
                                   CellTabulation& out) const {
  const CellMap map = CellMap::of(*mesh_, cell);
  out.det = map.det;
  out.physical.resize(ref_points.size());
  for (std::size_t i = 0; i < ref_points.size(); ++i) out.physical[i] = map.to_physical(ref_points[i]);
  if (family_ == Family::RT) {
    const auto sgn = cell_signs(cell);
    const Eigen::Map<const Eigen::RowVectorXd> s(sgn.data(), static_cast<Eigen::Index>(sgn.size()));
    const double inv_det = 1.0 / map.det;
    const auto& j = map.jacobian;
    out.value = ((j(0, 0) * inv_det) * ref.value + (j(0, 1) * inv_det) * ref.value_y).array().rowwise() *
                s.array();
    out.value_y = ((j(1, 0) * inv_det) * ref.value + (j(1, 1) * inv_det) * ref.value_y).array().rowwise() *
                  s.array();
    out.div = (inv_det * ref.div).array().rowwise() * s.array();
    out.dx.resize(0, 0);
    out.dy.resize(0, 0);
  } else {
    const auto& inv = map.inverse;
    out.value = ref.value;
    out.dx = inv(0, 0) * ref.d_xi + inv(1, 0) * ref.d_eta;
    out.dy = inv(0, 1) * ref.d_xi + inv(1, 1) * ref.d_eta;
    out.value_y.resize(0, 0);
    out.div.resize(0, 0);
  }
}

CellTabulation FunctionSpace::tabulate(Index cell, std::span<const Point> ref_points,
                                       bool strict) const {
  if (cell >= mesh_->num_cells()) throw SpaceError("cell index out of range");
  if (strict) {
    constexpr double tol = 1e-12;
    for (const Point& p : ref_points) {
      if (p.x < -tol || p.y < -tol || p.x + p.y > 1.0 + tol) {
        std::ostringstream msg;
        msg << "point (" << p.x << ", " << p.y << ") lies outside the reference triangle";
        throw SpaceError(msg.str());
      }
    }
  }
  CellTabulation out;
  map_tabulation(reference_.tabulate(ref_points), ref_points, cell, out);
  return out;
}

Vector FunctionSpace::basis_integrals() const {
  if (is_vector()) throw SpaceError("basis integrals are defined for scalar spaces only");
  const QuadratureRule& rule = quadrature_rule(triangle_quadrature_degree(polynomial_degree()));
  const ReferenceTabulation ref = reference_.tabulate(rule.points);
  const Eigen::Map<const Eigen::VectorXd> w(rule.weights.data(),
                                            static_cast<Eigen::Index>(rule.weights.size()));
  const Eigen::RowVectorXd local = w.transpose() * ref.value;
  Vector out = Vector::Zero(static_cast<Eigen::Index>(dim_));
  for (Index c = 0; c < mesh_->num_cells(); ++c) {
    const double det = CellMap::of(*mesh_, c).det;
    const auto dofs = cell_dofs(c);
    for (std::size_t i = 0; i < dofs.size(); ++i)
      out[static_cast<Eigen::Index>(dofs[i])] += det * local[static_cast<Eigen::Index>(i)];
  }
  return out;
}

SpacePtr make_space(std::shared_ptr<const Mesh> mesh, Family family, int degree,
                    std::vector<BoundaryTag> constrained) {
  return std::make_shared<const FunctionSpace>(std::move(mesh), family, degree, std::move(constrained));
}

// ---------------------------------------------------------------------------
// Fields
// ---------------------------------------------------------------------------

Field::Field(SpacePtr s) : space(std::move(s)) {
  coeffs = Vector::Zero(static_cast<Eigen::Index>(space->dim()));
}

Field::Field(SpacePtr s, Vector c) : space(std::move(s)), coeffs(std::move(c)) {
  if (static_cast<std::size_t>(coeffs.size()) != space->dim())
    throw SpaceError("coefficient vector length does not match the space dimension");
}

void Field::apply_constraints() {
  for (std::size_t i = 0; i < space->dim(); ++i)
    if (space->is_constrained(i)) coeffs[static_cast<Eigen::Index>(i)] = 0.0;
}

namespace {

template <class Rhs>
Field l2_project(const SpacePtr& space, Rhs&& local_rhs) {
  const FunctionSpace& V = *space;
  const Mesh& mesh = V.mesh();
  const int deg = triangle_quadrature_degree(2 * V.polynomial_degree() + 4);
  const QuadratureRule& rule = quadrature_rule(deg);
  const ReferenceTabulation ref = V.reference().tabulate(rule.points);
  std::vector<Eigen::Triplet<double>> trip;
  Vector rhs = Vector::Zero(static_cast<Eigen::Index>(V.num_free()));
  CellTabulation tab;
  const auto& free = V.free_index();
  for (Mesh::Index c = 0; c < mesh.num_cells(); ++c) {
    V.map_tabulation(ref, rule.points, c, tab);
    const auto dofs = V.cell_dofs(c);
    Eigen::VectorXd wq(static_cast<Eigen::Index>(rule.size()));
    for (std::size_t q = 0; q < rule.size(); ++q) wq[static_cast<Eigen::Index>(q)] = rule.weights[q] * tab.det;
    Eigen::MatrixXd local = tab.value.transpose() * wq.asDiagonal() * tab.value;
    if (V.is_vector()) local += tab.value_y.transpose() * wq.asDiagonal() * tab.value_y;
    const Eigen::VectorXd b = local_rhs(c, tab, wq);
    for (std::size_t i = 0; i < dofs.size(); ++i) {
      const long fi = free[dofs[i]];
      if (fi < 0) continue;
      rhs[fi] += b[static_cast<Eigen::Index>(i)];
      for (std::size_t j = 0; j < dofs.size(); ++j) {
        const long fj = free[dofs[j]];
        if (fj < 0) continue;
        trip.emplace_back(fi, fj, local(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      }
    }
  }
  Eigen::SparseMatrix<double> mass(static_cast<Eigen::Index>(V.num_free()),
                                   static_cast<Eigen::Index>(V.num_free()));
  mass.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(mass);
  if (solver.info() != Eigen::Success) throw SpaceError("mass matrix factorization failed in projection");
  const Vector reduced = solver.solve(rhs);
  Field out(space);
  for (std::size_t k = 0; k < V.num_free(); ++k)
    out.coeffs[static_cast<Eigen::Index>(V.free_dofs()[k])] = reduced[static_cast<Eigen::Index>(k)];
  return out;
}

}  // namespace

Field project(const SpacePtr& space, const ScalarFn& fn) {
  if (space->is_vector()) throw SpaceError("scalar projection into a vector space");
  return l2_project(space, [&](Mesh::Index, const CellTabulation& tab, const Eigen::VectorXd& wq) {
    Eigen::VectorXd f(wq.size());
    for (Eigen::Index q = 0; q < wq.size(); ++q) f[q] = wq[q] * fn(tab.physical[static_cast<std::size_t>(q)]);
    return Eigen::VectorXd(tab.value.transpose() * f);
  });
}

Field project(const SpacePtr& space, const VectorFn& fn) {
  if (!space->is_vector()) throw SpaceError("vector projection into a scalar space");
  return l2_project(space, [&](Mesh::Index, const CellTabulation& tab, const Eigen::VectorXd& wq) {
    Eigen::VectorXd fx(wq.size()), fy(wq.size());
    for (Eigen::Index q = 0; q < wq.size(); ++q) {
      const Vec2 v = fn(tab.physical[static_cast<std::size_t>(q)]);
      fx[q] = wq[q] * v.x();
      fy[q] = wq[q] * v.y();
    }
    return Eigen::VectorXd(tab.value.transpose() * fx + tab.value_y.transpose() * fy);
  });
}

Field interpolate(const SpacePtr& space, const ScalarFn& fn) {
  const FunctionSpace& V = *space;
  if (V.is_vector()) throw SpaceError("scalar interpolation into a vector space");
  Field out(space);
  const auto& nodes = V.reference().nodes();
  for (Mesh::Index c = 0; c < V.mesh().num_cells(); ++c) {
    const CellMap map = CellMap::of(V.mesh(), c);
    const auto dofs = V.cell_dofs(c);
    for (std::size_t i = 0; i < dofs.size(); ++i)
      out.coeffs[static_cast<Eigen::Index>(dofs[i])] = fn(map.to_physical(nodes[i]));
  }
  return out;
}

Field interpolate(const SpacePtr& space, const VectorFn& fn) {
  return interpolate(space, CellVectorFn([&](Mesh::Index, const Point& x) { return fn(x); }));
}

Field interpolate(const SpacePtr& space, const CellVectorFn& fn) {
  const FunctionSpace& V = *space;
  if (!V.is_vector()) throw SpaceError("vector interpolation into a scalar space");
  const Mesh& mesh = V.mesh();
  const int n = V.degree();
  Field out(space);
  std::vector<bool> edge_done(mesh.num_edges(), false);
  const LineRule& line = gauss_legendre(std::min(n + 6, 16));
  const QuadratureRule& rule = quadrature_rule(kMaxQuadratureDegree);
  const auto moments = [&] {
    std::vector<std::array<int, 2>> m;
    for (int total = 0; total <= n - 2; ++total)
      for (int b = 0; b <= total; ++b) m.push_back({total - b, b});
    return m;
  }();
  for (Mesh::Index c = 0; c < mesh.num_cells(); ++c) {
    const auto pts = mesh.cell_coords(c);
    for (int le = 0; le < 3; ++le) {
      const auto e = mesh.cell_edges(c)[static_cast<std::size_t>(le)];
      if (edge_done[e]) continue;
      edge_done[e] = true;
      const int sigma = mesh.cell_edge_signs(c)[static_cast<std::size_t>(le)];
      Point a = pts[static_cast<std::size_t>(Mesh::kEdgeVertices[static_cast<std::size_t>(le)][0])];
      Point b = pts[static_cast<std::size_t>(Mesh::kEdgeVertices[static_cast<std::size_t>(le)][1])];
      if (sigma < 0) std::swap(a, b);
      const Vec2 normal_ds(b.y - a.y, -(b.x - a.x));
      for (int j = 0; j < n; ++j) {
        double m = 0.0;
        for (std::size_t q = 0; q < line.points.size(); ++q) {
          const double s = line.points[q];
          const Vec2 f = fn(c, Point{a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)});
          m += line.weights[q] * legendre01(j, s) * f.dot(normal_ds);
        }
        out.coeffs[static_cast<Eigen::Index>(e * static_cast<std::size_t>(n) + static_cast<std::size_t>(j))] = m;
      }
    }
    if (moments.empty()) continue;
    const CellMap map = CellMap::of(mesh, c);
    const Eigen::Matrix2d pull = map.det * map.inverse;
    const auto dofs = V.cell_dofs(c);
    std::size_t k = 3 * static_cast<std::size_t>(n);
    for (int comp = 0; comp < 2; ++comp) {
      for (const auto& [pa, pb] : moments) {
        double m = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q) {
          const Point& r = rule.points[q];
          const Vec2 uhat = pull * fn(c, map.to_physical(r));
          m += rule.weights[q] * ipow(r.x, pa) * ipow(r.y, pb) * uhat[comp];
        }
        out.coeffs[static_cast<Eigen::Index>(dofs[k++])] = m;
      }
    }
  }
  return out;
}

double evaluate_scalar_in_cell(const Field& field, Mesh::Index cell, const Point& ref) {
  const FunctionSpace& V = *field.space;
  if (V.is_vector()) throw SpaceError("scalar evaluation of a vector field");
  const std::array<Point, 1> p{ref};
  const CellTabulation tab = V.tabulate(cell, p, false);
  const auto dofs = V.cell_dofs(cell);
  double v = 0.0;
  for (std::size_t i = 0; i < dofs.size(); ++i)
    v += tab.value(0, static_cast<Eigen::Index>(i)) * field.coeffs[static_cast<Eigen::Index>(dofs[i])];
  return v;
}

Vec2 evaluate_vector_in_cell(const Field& field, Mesh::Index cell, const Point& ref) {
  const FunctionSpace& V = *field.space;
  if (!V.is_vector()) throw SpaceError("vector evaluation of a scalar field");
  const std::array<Point, 1> p{ref};
  const CellTabulation tab = V.tabulate(cell, p, false);
  const auto dofs = V.cell_dofs(cell);
  Vec2 v = Vec2::Zero();
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    const double c = field.coeffs[static_cast<Eigen::Index>(dofs[i])];
    v.x() += tab.value(0, static_cast<Eigen::Index>(i)) * c;
    v.y() += tab.value_y(0, static_cast<Eigen::Index>(i)) * c;
  }
  return v;
}

Vec2 evaluate_gradient_in_cell(const Field& field, Mesh::Index cell, const Point& ref) {
  const FunctionSpace& V = *field.space;
  if (V.is_vector()) throw SpaceError("gradient of a vector field is not provided");
  const std::array<Point, 1> p{ref};
  const CellTabulation tab = V.tabulate(cell, p, false);
  const auto dofs = V.cell_dofs(cell);
  Vec2 g = Vec2::Zero();
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    const double c = field.coeffs[static_cast<Eigen::Index>(dofs[i])];
    g.x() += tab.dx(0, static_cast<Eigen::Index>(i)) * c;
    g.y() += tab.dy(0, static_cast<Eigen::Index>(i)) * c;
  }
  return g;
}

namespace {

CellPoint locate_or_throw(const Mesh& mesh, const Point& x) {
  const auto loc = mesh.locate(x);
  if (!loc) {
    std::ostringstream msg;
    msg << "point (" << x.x << ", " << x.y << ") lies outside the mesh";
    throw SpaceError(msg.str());
  }
  return *loc;
}

}  // namespace

double evaluate_scalar(const Field& field, const Point& x) {
  const CellPoint loc = locate_or_throw(field.space->mesh(), x);
  return evaluate_scalar_in_cell(field, loc.cell, loc.ref);
}

Vec2 evaluate_vector(const Field& field, const Point& x) {
  const CellPoint loc = locate_or_throw(field.space->mesh(), x);
  return evaluate_vector_in_cell(field, loc.cell, loc.ref);
}

double l2_error_squared(const Field& field, const CellVectorFn& exact, int degree) {
  const FunctionSpace& V = *field.space;
  if (!V.is_vector()) throw SpaceError("vector error of a scalar field");
  const QuadratureRule& rule = quadrature_rule(triangle_quadrature_degree(degree));
  const ReferenceTabulation ref = V.reference().tabulate(rule.points);
  CellTabulation tab;
  double err = 0.0;
  for (Mesh::Index c = 0; c < V.mesh().num_cells(); ++c) {
    V.map_tabulation(ref, rule.points, c, tab);
    const auto dofs = V.cell_dofs(c);
    Eigen::VectorXd local(static_cast<Eigen::Index>(dofs.size()));
    for (std::size_t i = 0; i < dofs.size(); ++i)
      local[static_cast<Eigen::Index>(i)] = field.coeffs[static_cast<Eigen::Index>(dofs[i])];
    const Eigen::VectorXd ux = tab.value * local, uy = tab.value_y * local;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Vec2 e = exact(c, tab.physical[q]);
      const double dx = ux[static_cast<Eigen::Index>(q)] - e.x();
      const double dy = uy[static_cast<Eigen::Index>(q)] - e.y();
      err += rule.weights[q] * tab.det * (dx * dx + dy * dy);
    }
  }
  return err;
}

double l2_error_squared(const Field& field, const VectorFn& exact, int degree) {
  return l2_error_squared(field, CellVectorFn([&](Mesh::Index, const Point& x) { return exact(x); }),
                          degree);
}

double l2_error_squared(const Field& field, const ScalarFn& exact, int degree) {
  const FunctionSpace& V = *field.space;
  if (V.is_vector()) throw SpaceError("scalar error of a vector field");
  const QuadratureRule& rule = quadrature_rule(triangle_quadrature_degree(degree));
  const ReferenceTabulation ref = V.reference().tabulate(rule.points);
  CellTabulation tab;
  double err = 0.0;
  for (Mesh::Index c = 0; c < V.mesh().num_cells(); ++c) {
    V.map_tabulation(ref, rule.points, c, tab);
    const auto dofs = V.cell_dofs(c);
    Eigen::VectorXd local(static_cast<Eigen::Index>(dofs.size()));
    for (std::size_t i = 0; i < dofs.size(); ++i)
      local[static_cast<Eigen::Index>(i)] = field.coeffs[static_cast<Eigen::Index>(dofs[i])];
    const Eigen::VectorXd u = tab.value * local;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double d = u[static_cast<Eigen::Index>(q)] - exact(tab.physical[q]);
      err += rule.weights[q] * tab.det * d * d;
    }
  }
  return err;
}

}  // namespace meevc
