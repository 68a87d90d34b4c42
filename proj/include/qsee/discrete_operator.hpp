#pragma once

#include "qsee/model_spec.hpp"
#include "qsee/spaces.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace qsee {

/// A_h(anchor) + γI as a sparse matrix, with an optional eigen-factorization
/// giving the exact semigroup.
class DiscreteOperator {
 public:
  DiscreteOperator(GridShape shape, Eigen::SparseMatrix<double> matrix, double shift);

  const GridShape& shape() const { return shape_; }
  const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }
  double shift() const { return shift_; }
  Eigen::Index size() const { return matrix_.rows(); }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return matrix_ * v; }
  GridField apply(const GridField& f) const { return GridField(shape_, matrix_ * f.values()); }

  bool is_symmetric(double tol = 1e-12) const;

  /// Dense symmetric eigendecomposition; requires a symmetric matrix.
  void eigen_factorize();
  bool has_eigen() const { return eigenvalues_.size() > 0; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }
  /// e^{−tA} v from the eigen-factorization.
  Eigen::VectorXd semigroup(const Eigen::VectorXd& v, double t) const;

 private:
  GridShape shape_;
  Eigen::SparseMatrix<double> matrix_;
  double shift_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
};

/// Stencil of A(anchor) + γ. Throws "ellipticity violated" when the
/// coefficient is not positive at some node.
DiscreteOperator assemble_operator(const ModelSpec& model, const GridField& anchor);

/// A(R_n u)u + γu, the quasilinear term at the current state.
GridField quasilinear_apply(const ModelSpec& model, const GridField& u, const GridField& u_trunc);

}  // namespace qsee
