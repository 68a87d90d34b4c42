#include "qsee/discrete_operator.hpp"

#include "qsee/errors.hpp"
#include "stencil.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <vector>

namespace qsee {

DiscreteOperator::DiscreteOperator(GridShape shape, Eigen::SparseMatrix<double> matrix, double shift)
    : shape_(shape), matrix_(std::move(matrix)), shift_(shift) {
  if (matrix_.rows() != shape_.size() || matrix_.cols() != shape_.size())
    throw ConfigError("operator size does not match grid");
}

bool DiscreteOperator::is_symmetric(double tol) const {
  const Eigen::SparseMatrix<double> diff = matrix_ - Eigen::SparseMatrix<double>(matrix_.transpose());
  double scale = 0.0;
  for (int k = 0; k < matrix_.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(matrix_, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  double worst = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  return worst <= tol * std::max(scale, 1.0);
}

void DiscreteOperator::eigen_factorize() {
  if (size() > 4096) throw ConfigError("operator too large for dense eigen-factorization");
  if (!is_symmetric(1e-10)) throw ConfigError("eigen-factorization needs a symmetric operator");
  const Eigen::MatrixXd dense = Eigen::MatrixXd(matrix_);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (dense + dense.transpose()));
  if (solver.info() != Eigen::Success) throw NumericalError("eigen-factorization failed");
  eigenvalues_ = solver.eigenvalues();
  eigenvectors_ = solver.eigenvectors();
}

Eigen::VectorXd DiscreteOperator::semigroup(const Eigen::VectorXd& v, double t) const {
  if (!has_eigen()) throw ConfigError("operator is not eigen-factorized");
  const Eigen::VectorXd c = eigenvectors_.transpose() * v;
  return eigenvectors_ * ((-t * eigenvalues_.array()).exp() * c.array()).matrix();
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

void divergence_stencil(const ModelSpec& model, const GridField& anchor, Triplets& out) {
  const GridShape& s = anchor.shape();
  const double inv_h2 = 1.0 / (s.h() * s.h());
  Eigen::VectorXd a(anchor.size());
  for (Eigen::Index k = 0; k < anchor.size(); ++k) {
    a[k] = model.diffusivity(anchor[k]);
    if (!(a[k] > 0.0)) throw NumericalError("ellipticity violated");
  }
  const double a_boundary = model.diffusivity(0.0);
  if (s.boundary == Boundary::dirichlet && !(a_boundary > 0.0)) throw NumericalError("ellipticity violated");
  for (int k = 0; k < s.size(); ++k) {
    double diag = 0.0;
    for (int axis = 0; axis < s.dim; ++axis) {
      for (int offset : {-1, 1}) {
        const int nb = detail::neighbor(s, k, axis, offset);
        const double face = 0.5 * (a[k] + (nb < 0 ? a_boundary : a[nb]));
        diag += face * inv_h2;
        if (nb >= 0) out.emplace_back(k, nb, -face * inv_h2);
      }
    }
    out.emplace_back(k, k, diag);
  }
}

void nondivergence_stencil(const ModelSpec& model, const GridField& anchor, Triplets& out) {
  const GridShape& s = anchor.shape();
  const double inv_h2 = 1.0 / (s.h() * s.h());
  for (int k = 0; k < s.size(); ++k) {
    const Eigen::Matrix2d a = model.coefficients(s.point(k), anchor[k], detail::gradient_at(anchor, k));
    if (s.dim == 1) {
      if (!(a(0, 0) > 0.0)) throw NumericalError("ellipticity violated");
    } else {
      const Eigen::Matrix2d sym = 0.5 * (a + a.transpose());
      if (!(sym.determinant() > 0.0 && sym(0, 0) > 0.0)) throw NumericalError("ellipticity violated");
    }
    double diag = 0.0;
    for (int axis = 0; axis < s.dim; ++axis) {
      const double c = a(axis, axis) * inv_h2;
      diag += 2.0 * c;
      for (int offset : {-1, 1}) {
        const int nb = detail::neighbor(s, k, axis, offset);
        if (nb >= 0) out.emplace_back(k, nb, -c);
      }
    }
    if (s.dim == 2) {
      // Mixed derivative (a_12 + a_21) ∂_x∂_y with the four-point stencil.
      const double c = (a(0, 1) + a(1, 0)) * 0.25 * inv_h2;
      for (int ox : {-1, 1}) {
        for (int oy : {-1, 1}) {
          const int nx = detail::neighbor(s, k, 0, ox);
          if (nx < 0) continue;
          const int nb = detail::neighbor(s, nx, 1, oy);
          if (nb < 0) continue;
          out.emplace_back(k, nb, -c * ox * oy);
        }
      }
    }
    out.emplace_back(k, k, diag);
  }
}

}  // namespace

DiscreteOperator assemble_operator(const ModelSpec& model, const GridField& anchor) {
  if (!anchor.is_finite()) throw NumericalError("non-finite field");
  const GridShape& s = anchor.shape();
  Triplets trips;
  trips.reserve(static_cast<std::size_t>(s.size()) * (s.dim == 1 ? 3 : 9));
  if (model.form == ModelForm::divergence) {
    divergence_stencil(model, anchor, trips);
  } else {
    nondivergence_stencil(model, anchor, trips);
  }
  for (int k = 0; k < s.size(); ++k) trips.emplace_back(k, k, model.shift);
  Eigen::SparseMatrix<double> m(s.size(), s.size());
  m.setFromTriplets(trips.begin(), trips.end());
  return DiscreteOperator(s, std::move(m), model.shift);
}

GridField quasilinear_apply(const ModelSpec& model, const GridField& u, const GridField& u_trunc) {
  return assemble_operator(model, u_trunc).apply(u);
}

}  // namespace qsee
