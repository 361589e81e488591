#include <doctest.h>

#include <Eigen/Dense>

#include <random>

#include "meevc/linsolve.hpp"

using namespace meevc;

namespace {

SparseMatrix sparse(const Eigen::MatrixXd& d) { return d.sparseView(); }

const std::vector<BoundaryTag> kWalls{BoundaryTag::Top, BoundaryTag::Right, BoundaryTag::Bottom, BoundaryTag::Left};

Vector random_vector(Eigen::Index n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(gen);
  return v;
}

/// Dense bordered KKT system with a Lagrange multiplier for the pressure mean.
std::pair<Vector, Vector> kkt_oracle(const SparseMatrix& A, const SparseMatrix& D, const Vector& f,
                                     const FunctionSpace& U, const Vector& qint) {
  const auto& free = U.free_dofs();
  const Eigen::Index nu = static_cast<Eigen::Index>(free.size()), nq = D.rows();
  const Eigen::MatrixXd Ad(A), Dd(D);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nu + nq + 1, nu + nq + 1);
  Vector b = Vector::Zero(nu + nq + 1);
  for (Eigen::Index i = 0; i < nu; ++i) {
    b[i] = f[static_cast<Eigen::Index>(free[i])];
    for (Eigen::Index j = 0; j < nu; ++j) K(i, j) = Ad(free[i], free[j]);
    for (Eigen::Index q = 0; q < nq; ++q) {
      K(i, nu + q) = -Dd(q, free[i]);
      K(nu + q, i) = Dd(q, free[i]);
    }
  }
  for (Eigen::Index q = 0; q < nq; ++q) {
    K(nu + q, nu + nq) = qint[q];
    K(nu + nq, nu + q) = qint[q];
  }
  const Vector x = K.fullPivLu().solve(b);
  Vector u = Vector::Zero(static_cast<Eigen::Index>(U.dim()));
  for (Eigen::Index i = 0; i < nu; ++i) u[static_cast<Eigen::Index>(free[i])] = x[i];
  return {u, x.segment(nu, nq)};
}

}  // namespace

TEST_CASE("direct solves") {
  const Vector b = random_vector(5, 1);
  const SolveResult id = lu_solve({sparse(Eigen::MatrixXd::Identity(5, 5)), b, {}, {}});
  CHECK((id.x - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK(id.report.iterations == 0);

  Eigen::MatrixXd a(2, 2);
  a << 2, 1, 1, 2;
  const SolveResult two = lu_solve({sparse(a), Vector::Constant(2, 3.0), {}, {}});
  CHECK(two.x[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(two.x[1] == doctest::Approx(1.0).epsilon(1e-15));

  const auto mesh = std::make_shared<const Mesh>(build_channel_mesh({2.0, 1.0, 1.0}, 4, 2, DiagonalPattern::Left));
  const auto W = make_space(mesh, Family::CG, 1);
  const SparseMatrix N = assemble_mass(*W);
  const SolveResult ones = lu_solve({N, W->basis_integrals(), {}, {}});
  CHECK((ones.x.array() - 1.0).abs().maxCoeff() <= 1e-12);
  CHECK(ones.report.residual <= 1e-10 * (1.0 + W->basis_integrals().cwiseAbs().maxCoeff()));
}

TEST_CASE("fixed dofs are eliminated and take their values") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(6, 6) + 6.0 * Eigen::MatrixXd::Identity(6, 6);
  const Vector b = random_vector(6, 2);
  const SolveResult r = lu_solve({sparse(a), b, {1, 4}, {0.5, -2.0}});
  CHECK(r.x[1] == 0.5);
  CHECK(r.x[4] == -2.0);
  const Vector res = a * r.x - b;
  for (int i : {0, 2, 3, 5}) CHECK(std::abs(res[i]) <= 1e-12);

  FactoredSystem f(sparse(a), {1, 4});
  const SolveResult first = f.solve(b), second = f.solve(2.0 * b);
  CHECK_FALSE(first.report.reused);
  CHECK(second.report.reused);
  CHECK((second.x - 2.0 * first.x).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(first.x[1] == 0.0);
}

TEST_CASE("singular systems are reported") {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(3, 3);
  s(0, 0) = 1.0;
  s(1, 1) = 1.0;
  CHECK_THROWS_AS(lu_solve({sparse(s), Vector::Ones(3), {}, {}}), SolverError);
  CHECK_THROWS_AS(lu_solve({sparse(Eigen::MatrixXd::Identity(3, 2)), Vector::Ones(3), {}, {}}), SolverError);
  CHECK_THROWS_AS(lu_solve({sparse(Eigen::MatrixXd::Identity(3, 3)), Vector::Ones(2), {}, {}}), SolverError);
}

TEST_CASE("conjugate gradients") {
  const Vector d = Vector::LinSpaced(8, 1.0, 8.0);
  const Vector b = random_vector(8, 3);
  const SolveResult r = cg_solve({sparse(Eigen::MatrixXd(d.asDiagonal())), b, {}, {}}, 1e-12, 100);
  CHECK(r.report.iterations <= 8);
  CHECK((r.x - b.cwiseQuotient(d)).cwiseAbs().maxCoeff() <= 1e-12);

  const SolveResult zero = cg_solve({sparse(Eigen::MatrixXd(d.asDiagonal())), Vector::Zero(8), {}, {}}, 1e-12, 100);
  CHECK(zero.report.iterations == 0);
  CHECK(zero.x.cwiseAbs().maxCoeff() == 0.0);

  const auto mesh = std::make_shared<const Mesh>(build_channel_mesh({3.0, 1.0, 1.0}, 6, 3, DiagonalPattern::Crisscross));
  const auto U = make_space(mesh, Family::RT, 2, kWalls);
  const SparseMatrix M = assemble_mass(*U);
  std::vector<std::size_t> fixed;
  for (std::size_t i = 0; i < U->dim(); ++i)
    if (U->is_constrained(i)) fixed.push_back(i);
  const LinearSystem sys{M, random_vector(M.rows(), 4), fixed, {}};
  const SolveResult c = cg_solve(sys, 1e-12, 5000);
  const SolveResult l = lu_solve(sys);
  CHECK((c.x - l.x).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(c.report.iterations > 0);

  CHECK_THROWS_AS(cg_solve(sys, 1e-14, 2), SolverError);
}

TEST_CASE("repeated LU reuses the analysis for one structure") {
  const auto mesh = std::make_shared<const Mesh>(build_channel_mesh({3.0, 1.0, 1.0}, 4, 2, DiagonalPattern::Left));
  const auto W = make_space(mesh, Family::CG, 2, {BoundaryTag::Left, BoundaryTag::Right});
  const SparseMatrix N = assemble_mass(*W), L = assemble_curlcurl(*W);
  RepeatedLu lu;
  const Vector b = random_vector(N.rows(), 5);
  const SolveResult a = lu.solve(SparseMatrix(N + 0.1 * L), W->free_index(), b);
  const SolveResult c = lu.solve(SparseMatrix(N + 0.2 * L), W->free_index(), b);
  CHECK_FALSE(a.report.reused);
  CHECK(c.report.reused);
  LinearSystem ref{SparseMatrix(N + 0.2 * L), b, {}, {}};
  for (std::size_t i = 0; i < W->dim(); ++i)
    if (W->is_constrained(i)) ref.fixed.push_back(i);
  CHECK((lu_solve(ref).x - c.x).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("saddle solve matches the monolithic KKT oracle") {
  for (bool periodic : {false, true}) {
    CAPTURE(periodic);
    const auto mesh = periodic ? std::make_shared<const Mesh>(build_periodic_rect_mesh(2.0, 1.0, 4, 3))
                               : std::make_shared<const Mesh>(build_channel_mesh({3.0, 1.0, 1.0}, 4, 2, DiagonalPattern::Right));
    for (int n = 1; n <= 2; ++n) {
      const auto U = make_space(mesh, Family::RT, n, periodic ? std::vector<BoundaryTag>{} : kWalls);
      const auto Q = make_space(mesh, Family::DG, n);
      const auto W = make_space(mesh, Family::CG, n);
      const SparseMatrix M = assemble_mass(*U), D = assemble_div(*U, *Q);
      const Vector f = random_vector(M.rows(), 6 + n);
      const Vector qint = Q->basis_integrals();

      // Stokes-like: A = M / dt
      const SparseMatrix A0 = M / 0.01;
      const SaddleResult s0 = solve_saddle(A0, D, f, U, Q);
      const auto [u0, p0] = kkt_oracle(A0, D, f, *U, qint);
      CHECK((s0.u - u0).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK((s0.p - p0).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK((D * s0.u).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK(std::abs(qint.dot(s0.p)) <= 1e-12);

      // with rotation
      Field w(W, random_vector(static_cast<Eigen::Index>(W->dim()), 9));
      const SparseMatrix A1 = M / 0.01 + 0.5 * assemble_rotation(w, *U).R;
      SaddleSolver solver(U, Q);
      const SaddleResult s1 = solver.solve(A1, D, f);
      const SaddleResult s2 = solver.solve(A1, D, 2.0 * f);
      const auto [u1, p1] = kkt_oracle(A1, D, f, *U, qint);
      CHECK((s1.u - u1).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK((s1.p - p1).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK(s2.report.reused);
      CHECK((s2.u - 2.0 * s1.u).cwiseAbs().maxCoeff() <= 1e-9);

      const SaddleResult z = solve_saddle(A1, D, Vector::Zero(f.size()), U, Q);
      CHECK(z.u.cwiseAbs().maxCoeff() == 0.0);
      CHECK(z.p.cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("constant projection") {
  const auto mesh = std::make_shared<const Mesh>(build_channel_mesh({1.0, 1.0, 0.5}, 3, 3, DiagonalPattern::Left));
  const auto Q = make_space(mesh, Family::DG, 2);
  CHECK(project_out_constant(Vector::Constant(Q->dim(), 3.7), *Q).cwiseAbs().maxCoeff() <= 1e-14);
  const Vector r = project_out_constant(random_vector(Q->dim(), 7), *Q);
  CHECK((project_out_constant(r, *Q) - r).cwiseAbs().maxCoeff() <= 1e-14);
  const Field y = project(Q, ScalarFn([](const Point& p) { return p.y; }));
  CHECK((project_out_constant(y.coeffs, *Q) - (y.coeffs.array() - 0.5).matrix()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_THROWS_AS(project_out_constant(Vector::Ones(3), *Q), SolverError);
}
