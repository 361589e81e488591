#include "meevc/linsolve.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace meevc {

namespace {

constexpr double kDirectTolerance = 1e-10;

using ColMatrix = Eigen::SparseMatrix<double>;

struct Reduction {
  std::vector<long> free_index;
  std::vector<std::size_t> free;
  Vector fixed_full;  // prescribed values, zero on free dofs
};

Reduction reduce(const LinearSystem& s) {
  const auto n = static_cast<std::size_t>(s.matrix.rows());
  if (s.matrix.rows() != s.matrix.cols()) throw SolverError("system matrix is not square");
  if (static_cast<std::size_t>(s.rhs.size()) != n) throw SolverError("right-hand side length mismatch");
  if (!s.fixed_values.empty() && s.fixed_values.size() != s.fixed.size())
    throw SolverError("fixed value list length mismatch");
  Reduction r;
  r.free_index.assign(n, 0);
  r.fixed_full = Vector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < s.fixed.size(); ++k) {
    if (s.fixed[k] >= n) throw SolverError("fixed dof out of range");
    r.free_index[s.fixed[k]] = -1;
    if (!s.fixed_values.empty()) r.fixed_full[static_cast<Eigen::Index>(s.fixed[k])] = s.fixed_values[k];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (r.free_index[i] < 0) continue;
    r.free_index[i] = static_cast<long>(r.free.size());
    r.free.push_back(i);
  }
  return r;
}

Vector reduced_rhs(const LinearSystem& s, const Reduction& r) {
  const Vector full = s.rhs - s.matrix * r.fixed_full;
  Vector b(static_cast<Eigen::Index>(r.free.size()));
  for (std::size_t k = 0; k < r.free.size(); ++k)
    b[static_cast<Eigen::Index>(k)] = full[static_cast<Eigen::Index>(r.free[k])];
  return b;
}

Vector expand(const Vector& xf, const Reduction& r) {
  Vector x = r.fixed_full;
  for (std::size_t k = 0; k < r.free.size(); ++k)
    x[static_cast<Eigen::Index>(r.free[k])] = xf[static_cast<Eigen::Index>(k)];
  return x;
}

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

void check_direct_residual(const ColMatrix& A, const Vector& x, const Vector& b, SolverReport& rep,
                           const char* what) {
  rep.residual = inf_norm(A * x - b);
  if (!(rep.residual <= kDirectTolerance * (1.0 + inf_norm(b)))) {
    std::ostringstream msg;
    msg << what << ": residual " << rep.residual << " exceeds tolerance";
    throw SolverError(msg.str());
  }
}

/// Factorizes, repeating the symbolic analysis only when the structure differs from
/// the remembered one. Returns true when the analysis was reused.
bool factorize_cached(Eigen::SparseLU<ColMatrix>& lu, ColMatrix& A, std::vector<int>& outer,
                      std::vector<int>& inner, bool& analyzed, const char* what);

void factorize(Eigen::SparseLU<ColMatrix>& lu, const ColMatrix& A, bool analyze, const char* what) {
  if (analyze) lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << what << ": factorization failed (" << lu.lastErrorMessage() << ")";
    throw SolverError(msg.str());
  }
}

bool factorize_cached(Eigen::SparseLU<ColMatrix>& lu, ColMatrix& A, std::vector<int>& outer,
                      std::vector<int>& inner, bool& analyzed, const char* what) {
  A.makeCompressed();
  const bool same = analyzed && static_cast<std::size_t>(A.outerSize() + 1) == outer.size() &&
                    static_cast<std::size_t>(A.nonZeros()) == inner.size() &&
                    std::equal(outer.begin(), outer.end(), A.outerIndexPtr()) &&
                    std::equal(inner.begin(), inner.end(), A.innerIndexPtr());
  factorize(lu, A, !same, what);
  if (!same) {
    outer.assign(A.outerIndexPtr(), A.outerIndexPtr() + A.outerSize() + 1);
    inner.assign(A.innerIndexPtr(), A.innerIndexPtr() + A.nonZeros());
    analyzed = true;
  }
  return same;
}

}  // namespace

Eigen::SparseMatrix<double> restrict_matrix(const SparseMatrix& A, const std::vector<long>& row_free,
                                            const std::vector<long>& col_free) {
  long nr = 0, nc = 0;
  for (long v : row_free) nr = std::max(nr, v + 1);
  for (long v : col_free) nc = std::max(nc, v + 1);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(A.nonZeros()));
  for (Eigen::Index i = 0; i < A.outerSize(); ++i) {
    const long ri = row_free[static_cast<std::size_t>(i)];
    if (ri < 0) continue;
    for (SparseMatrix::InnerIterator it(A, i); it; ++it) {
      const long cj = col_free[static_cast<std::size_t>(it.col())];
      if (cj >= 0) trip.emplace_back(ri, cj, it.value());
    }
  }
  ColMatrix out(nr, nc);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

SolveResult lu_solve(const LinearSystem& system) {
  const Reduction r = reduce(system);
  const ColMatrix A = restrict_matrix(system.matrix, r.free_index, r.free_index);
  const Vector b = reduced_rhs(system, r);
  SolveResult out;
  if (r.free.empty()) {
    out.x = r.fixed_full;
    return out;
  }
  Eigen::SparseLU<ColMatrix> lu;
  factorize(lu, A, true, "LU solve");
  const Vector xf = lu.solve(b);
  check_direct_residual(A, xf, b, out.report, "LU solve");
  out.x = expand(xf, r);
  return out;
}

SolveResult cg_solve(const LinearSystem& system, double tol, int max_iter) {
  const Reduction r = reduce(system);
  const ColMatrix A = restrict_matrix(system.matrix, r.free_index, r.free_index);
  const Vector b = reduced_rhs(system, r);
  SolveResult out;
  const double bnorm = b.norm();
  Vector x = Vector::Zero(b.size());
  if (bnorm == 0.0) {
    out.x = expand(x, r);
    return out;
  }
  Eigen::ConjugateGradient<ColMatrix, Eigen::Lower | Eigen::Upper> cg(A);
  cg.setTolerance(tol);
  cg.setMaxIterations(max_iter);
  x = cg.solve(b);
  const int it = static_cast<int>(cg.iterations());
  if (cg.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "CG did not converge in " << max_iter << " iterations (relative residual " << cg.error() << ")";
    throw SolverError(msg.str());
  }
  out.report.iterations = it;
  out.report.residual = inf_norm(A * x - b);
  out.x = expand(x, r);
  return out;
}

FactoredSystem::FactoredSystem(const SparseMatrix& matrix, std::vector<std::size_t> fixed) {
  LinearSystem s{matrix, Vector::Zero(matrix.rows()), std::move(fixed), {}};
  const Reduction r = reduce(s);
  n_ = static_cast<std::size_t>(matrix.rows());
  free_index_ = r.free_index;
  free_ = r.free;
  reduced_ = restrict_matrix(matrix, free_index_, free_index_);
  if (!free_.empty()) factorize(lu_, reduced_, true, "factored system");
}

SolveResult FactoredSystem::solve(const Vector& rhs) {
  if (static_cast<std::size_t>(rhs.size()) != n_) throw SolverError("right-hand side length mismatch");
  SolveResult out;
  out.x = Vector::Zero(static_cast<Eigen::Index>(n_));
  out.report.reused = used_;
  used_ = true;
  if (free_.empty()) return out;
  Vector b(static_cast<Eigen::Index>(free_.size()));
  for (std::size_t k = 0; k < free_.size(); ++k) b[static_cast<Eigen::Index>(k)] = rhs[static_cast<Eigen::Index>(free_[k])];
  const Vector xf = lu_.solve(b);
  check_direct_residual(reduced_, xf, b, out.report, "factored solve");
  for (std::size_t k = 0; k < free_.size(); ++k) out.x[static_cast<Eigen::Index>(free_[k])] = xf[static_cast<Eigen::Index>(k)];
  return out;
}

SolveResult RepeatedLu::solve(const SparseMatrix& A, const std::vector<long>& free_index,
                              const Vector& rhs) {
  const auto n = static_cast<std::size_t>(A.rows());
  if (free_index.size() != n || static_cast<std::size_t>(rhs.size()) != n || A.cols() != A.rows())
    throw SolverError("system dimensions do not match the dof map");
  ColMatrix K = restrict_matrix(A, free_index, free_index);
  Vector b(K.rows());
  for (std::size_t i = 0; i < n; ++i)
    if (free_index[i] >= 0) b[free_index[i]] = rhs[static_cast<Eigen::Index>(i)];
  SolveResult out;
  out.x = Vector::Zero(static_cast<Eigen::Index>(n));
  if (K.rows() == 0) return out;
  out.report.reused = factorize_cached(lu_, K, outer_, inner_, analyzed_, "LU solve");
  const Vector x = lu_.solve(b);
  check_direct_residual(K, x, b, out.report, "LU solve");
  for (std::size_t i = 0; i < n; ++i)
    if (free_index[i] >= 0) out.x[static_cast<Eigen::Index>(i)] = x[free_index[i]];
  return out;
}

SaddleSolver::SaddleSolver(SpacePtr U, SpacePtr Q) : U_(std::move(U)), Q_(std::move(Q)) {
  if (!U_ || !Q_) throw SolverError("saddle solver needs both spaces");
  q_integrals_ = Q_->basis_integrals();
}

SaddleResult SaddleSolver::solve(const SparseMatrix& A, const SparseMatrix& D, const Vector& f) {
  const std::size_t nu = U_->dim(), nq = Q_->dim();
  if (static_cast<std::size_t>(A.rows()) != nu || static_cast<std::size_t>(A.cols()) != nu ||
      static_cast<std::size_t>(D.rows()) != nq || static_cast<std::size_t>(D.cols()) != nu ||
      static_cast<std::size_t>(f.size()) != nu)
    throw SolverError("saddle system dimensions do not match the spaces");
  const auto& ufree = U_->free_index();
  const auto nuf = static_cast<long>(U_->num_free());
  // pressure dof 0 is pinned; the rest follow the velocity block
  std::vector<long> qfree(nq);
  for (std::size_t i = 0; i < nq; ++i) qfree[i] = i == 0 ? -1 : nuf + static_cast<long>(i) - 1;
  const long n = nuf + static_cast<long>(nq) - 1;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(A.nonZeros() + 2 * D.nonZeros()));
  for (Eigen::Index i = 0; i < A.outerSize(); ++i) {
    const long ri = ufree[static_cast<std::size_t>(i)];
    if (ri < 0) continue;
    for (SparseMatrix::InnerIterator it(A, i); it; ++it) {
      const long cj = ufree[static_cast<std::size_t>(it.col())];
      if (cj >= 0) trip.emplace_back(ri, cj, it.value());
    }
  }
  for (Eigen::Index i = 0; i < D.outerSize(); ++i) {
    const long qi = qfree[static_cast<std::size_t>(i)];
    if (qi < 0) continue;
    for (SparseMatrix::InnerIterator it(D, i); it; ++it) {
      const long cj = ufree[static_cast<std::size_t>(it.col())];
      if (cj < 0) continue;
      trip.emplace_back(qi, cj, it.value());
      trip.emplace_back(cj, qi, -it.value());
    }
  }
  ColMatrix K(n, n);
  K.setFromTriplets(trip.begin(), trip.end());
  K.makeCompressed();
  Vector b = Vector::Zero(n);
  for (std::size_t i = 0; i < nu; ++i)
    if (ufree[i] >= 0) b[ufree[i]] = f[static_cast<Eigen::Index>(i)];

  const bool same = factorize_cached(lu_, K, outer_, inner_, analyzed_, "saddle solve");
  const Vector x = lu_.solve(b);

  SaddleResult out;
  out.report.reused = same;
  check_direct_residual(K, x, b, out.report, "saddle solve");
  out.u = Vector::Zero(static_cast<Eigen::Index>(nu));
  for (std::size_t i = 0; i < nu; ++i)
    if (ufree[i] >= 0) out.u[static_cast<Eigen::Index>(i)] = x[ufree[i]];
  Vector p = Vector::Zero(static_cast<Eigen::Index>(nq));
  for (std::size_t i = 1; i < nq; ++i) p[static_cast<Eigen::Index>(i)] = x[qfree[i]];
  out.p = project_out_constant(p, q_integrals_);
  return out;
}

SaddleResult solve_saddle(const SparseMatrix& A, const SparseMatrix& D, const Vector& f,
                          const SpacePtr& U, const SpacePtr& Q) {
  SaddleSolver solver(U, Q);
  return solver.solve(A, D, f);
}

Vector project_out_constant(const Vector& q, const FunctionSpace& Q) {
  if (Q.is_vector()) throw SolverError("constant projection needs a scalar space");
  if (static_cast<std::size_t>(q.size()) != Q.dim()) throw SolverError("vector length mismatch");
  return project_out_constant(q, Q.basis_integrals());
}

Vector project_out_constant(const Vector& q, const Vector& basis_integrals) {
  if (q.size() != basis_integrals.size()) throw SolverError("vector length mismatch");
  return q.array() - basis_integrals.dot(q) / basis_integrals.sum();
}

}  // namespace meevc
