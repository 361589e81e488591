/// @file linsolve.hpp
/// @brief Direct and iterative solves with eliminated constraints, and the
/// velocity-pressure saddle-point solve.

#pragma once

#include <Eigen/SparseLU>

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "meevc/operators.hpp"

namespace meevc {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolverReport {
  int iterations = 0;     // 0 for direct solves
  double residual = 0.0;  // infinity norm of the reduced residual
  bool reused = false;    // factorization reused from an earlier solve
};

/// A x = b where the listed dofs are fixed to given values and their rows dropped.
struct LinearSystem {
  SparseMatrix matrix;
  Vector rhs;
  std::vector<std::size_t> fixed;
  std::vector<double> fixed_values;  // empty means all zero
};

struct SolveResult {
  Vector x;
  SolverReport report;
};

/// Sparse LU on the reduced system. Throws SolverError when the matrix is singular or
/// the residual exceeds 1e-10 (1 + |b|_inf).
SolveResult lu_solve(const LinearSystem& system);

/// Jacobi-preconditioned conjugate gradients on the reduced system.
/// Throws SolverError on non-convergence within max_iter.
SolveResult cg_solve(const LinearSystem& system, double tol, int max_iter);

/// A factorization kept for repeated solves with one matrix and one constraint set.
class FactoredSystem {
 public:
  FactoredSystem(const SparseMatrix& matrix, std::vector<std::size_t> fixed);
  /// Solves with fixed dofs set to zero. `rhs` has full length.
  SolveResult solve(const Vector& rhs);
  std::size_t size() const { return n_; }

 private:
  std::size_t n_ = 0;
  std::vector<long> free_index_;
  std::vector<std::size_t> free_;
  Eigen::SparseMatrix<double> reduced_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  bool used_ = false;
};

/// LU for a sequence of matrices sharing one sparsity structure, as produced by the
/// same assembly pattern. The symbolic analysis is redone only when the structure
/// changes. Dofs with a negative free index are held at zero.
class RepeatedLu {
 public:
  SolveResult solve(const SparseMatrix& A, const std::vector<long>& free_index, const Vector& rhs);

 private:
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  std::vector<int> outer_, inner_;
  bool analyzed_ = false;
};

/// Reduced copy of A keeping rows/columns whose free index is non-negative.
Eigen::SparseMatrix<double> restrict_matrix(const SparseMatrix& A, const std::vector<long>& row_free,
                                            const std::vector<long>& col_free);

struct SaddleResult {
  Vector u;
  Vector p;
  SolverReport report;
};

/// Solves  [A  -D^T; D  0] (u, p) = (f, 0)  with constrained velocity dofs held at zero.
/// One pressure dof is pinned and the result is shifted to zero mean.
/// The symbolic analysis is reused while the system structure stays the same.
class SaddleSolver {
 public:
  SaddleSolver(SpacePtr U, SpacePtr Q);

  SaddleResult solve(const SparseMatrix& A, const SparseMatrix& D, const Vector& f);

 private:
  SpacePtr U_, Q_;
  Vector q_integrals_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  std::vector<int> outer_, inner_;
  bool analyzed_ = false;
};

/// One-shot variant of SaddleSolver.
SaddleResult solve_saddle(const SparseMatrix& A, const SparseMatrix& D, const Vector& f,
                          const SpacePtr& U, const SpacePtr& Q);

/// Removes the mean of a scalar field whose space represents constants by all-ones
/// coefficients (Lagrange CG and DG).
Vector project_out_constant(const Vector& q, const FunctionSpace& Q);
/// Same, with precomputed basis integrals.
Vector project_out_constant(const Vector& q, const Vector& basis_integrals);

}  // namespace meevc
