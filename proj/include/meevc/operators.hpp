/// @file operators.hpp
/// @brief Matrices and load vectors of the velocity-vorticity-concentration discretization.
///
/// Sign and vector conventions in 2D:
///   curl w   = (dw/dy, -dw/dx)        for scalar w
///   w x u    = w (-u_y, u_x)
///   grad f x e_g = -df/dx             with gravity e_g = (0, -1)
///
/// All matrices are assembled over every dof of their spaces; constrained dofs are
/// removed later by the solver. Cells are visited in index order, so assembly is
/// deterministic.

#pragma once

#include <Eigen/Sparse>

#include <stdexcept>
#include <vector>

#include "meevc/femspace.hpp"

namespace meevc {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class OperatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sparsity of a bilinear form between a test space (rows) and a trial space
/// (columns), with a table locating each cell-local entry in the value array.
class Pattern {
 public:
  Pattern(const FunctionSpace& test, const FunctionSpace& trial);

  /// Matrix with the full structure and all values zero.
  SparseMatrix zero() const { return structure_; }
  /// Adds a (test x trial) local matrix of `cell` into `A`, which must share the structure.
  void add(Mesh::Index cell, const Eigen::MatrixXd& local, SparseMatrix& A) const;

 private:
  SparseMatrix structure_;
  std::vector<Eigen::Index> slots_;
  Eigen::Index test_local_ = 0, trial_local_ = 0;
};

/// Volume and edge quadrature orders used by every form.
struct QuadratureOrders {
  int volume = 4;
  int boundary_points = 3;

  static QuadratureOrders for_degree(int degree);
};

// Static matrices -----------------------------------------------------------

/// <v_j, v_i> for scalar or vector spaces.
SparseMatrix assemble_mass(const FunctionSpace& space);
/// D_ij = <div u_j, q_i>; rows index Q, columns U. P = D^T.
SparseMatrix assemble_div(const FunctionSpace& U, const FunctionSpace& Q);
/// <curl w_j, curl w_i> = <grad w_j, grad w_i>.
SparseMatrix assemble_curlcurl(const FunctionSpace& W);

// State-dependent forms -----------------------------------------------------

struct RotationForms {
  SparseMatrix R;  // R_ij = <omega x u_j, u_i>
  Vector l;        // l_i = <curl omega, u_i>
};

RotationForms assemble_rotation(const Field& omega, const FunctionSpace& U);

/// W_ij = <w_j, div(u w_i)>.
SparseMatrix assemble_vorticity_convection(const Field& u, const FunctionSpace& W);
/// The skew convection operator 1/2 (W^T - W) acting on vorticity coefficients.
SparseMatrix skew_convection(const SparseMatrix& W);

/// Transport matrix of particle concentration with particle velocity u + u_s e_g:
/// skew volume part plus settling terms on the top and bottom walls. With
/// `literal_top_wall_sign` the top-wall term takes the opposite sign.
SparseMatrix assemble_particle_convection(const Field& u, const FunctionSpace& Phi, double u_s,
                                          bool literal_top_wall_sign = false);

/// b_i = <phi e_g, u_i>.
Vector assemble_buoyancy(const Field& phi, const FunctionSpace& U);
/// c_i = <grad phi x e_g, xi_i> = -<d phi/dx, xi_i>.
Vector assemble_baroclinic(const Field& phi, const FunctionSpace& W);
/// r_i = <u, curl xi_i>.
Vector assemble_curl_h_rhs(const Field& u, const FunctionSpace& W);
/// g_i = <xi_i, grad omega_tilde . n> on the top and bottom walls, evaluated from the
/// boundary cell.
Vector assemble_vorticity_neumann(const Field& omega_tilde, const FunctionSpace& W);

// Load vectors used by diagnostics --------------------------------------------

/// Integral of each scalar basis function over the boundary part `tag`.
Vector assemble_boundary_load(const FunctionSpace& S, BoundaryTag tag);
/// Integral of d(basis)/dx (component 0) or d(basis)/dy (component 1).
Vector assemble_derivative_load(const FunctionSpace& S, int component);

/// Integral over all tagged boundary edges of weight(x) grad f . n, f a scalar field.
double boundary_gradient_flux(const Field& f, const ScalarFn& weight);

/// Everything one simulation needs, with sparsity patterns built once.
/// `Phi` may be null for runs without particles. It must share the dof layout of W.
class OperatorSet {
 public:
  OperatorSet(SpacePtr U, SpacePtr W, SpacePtr Q, SpacePtr Phi, bool literal_top_wall_sign = false);

  const SpacePtr& U() const { return U_; }
  const SpacePtr& W() const { return W_; }
  const SpacePtr& Q() const { return Q_; }
  const SpacePtr& Phi() const { return Phi_; }
  bool literal_top_wall_sign() const { return literal_; }

  SparseMatrix M;  // RT mass
  SparseMatrix N;  // CG mass; also the concentration mass
  SparseMatrix L;  // curl-curl; also the concentration diffusion matrix
  SparseMatrix D;  // divergence
  SparseMatrix P;  // D^T

  Vector w_integrals;  // int xi_i
  Vector q_integrals;  // int q_i
  Vector bottom_load;  // int_{bottom} xi_i   (channel meshes)
  Vector top_load;     // int_{top} xi_i      (channel meshes)
  Vector dy_load;      // int d xi_i / dy
  Vector y_coeffs;     // the function y in CG_N

  RotationForms rotation(const Field& omega) const;
  /// l alone: l_i = <curl omega, u_i>.
  Vector viscous_load(const Field& omega) const;
  SparseMatrix vorticity_convection(const Field& u) const;
  SparseMatrix particle_convection(const Field& u, double u_s) const;
  Vector buoyancy(const Field& phi) const;
  Vector baroclinic(const Field& phi) const;
  Vector curl_h_rhs(const Field& u) const;
  Vector vorticity_neumann(const Field& omega_tilde) const;

 private:
  SpacePtr U_, W_, Q_, Phi_;
  bool literal_ = false;
  Pattern uu_, ww_;
};

}  // namespace meevc
