#pragma once

#include <Eigen/Core>

namespace gcdc {

/// Orthonormal D x D basis of residual directions, columns ordered by
/// descending eigenvalue of the (uncentered) second-moment matrix.
struct PcaBasis {
  Eigen::MatrixXd basis;
  Eigen::VectorXd eigenvalues;

  Eigen::Index dim() const { return basis.rows(); }
};

/// Eigendecomposition of a symmetric second-moment matrix. Throws
/// NumericalFailure if the solver does not converge. An all-zero matrix
/// yields the identity basis.
PcaBasis basis_from_moment(const Eigen::MatrixXd& moment);

/// PCA without mean-centering over the rows of `residuals` (N x D).
template <typename Derived>
PcaBasis fit_pca(const Eigen::MatrixBase<Derived>& residuals) {
  const Eigen::MatrixXd r = residuals.template cast<double>();
  Eigen::MatrixXd moment = Eigen::MatrixXd::Zero(r.cols(), r.cols());
  moment.selfadjointView<Eigen::Lower>().rankUpdate(r.transpose());
  moment = moment.selfadjointView<Eigen::Lower>();
  if (r.rows() > 0) moment /= static_cast<double>(r.rows());
  return basis_from_moment(moment);
}

/// c = U^T r.
template <typename DerivedR, typename DerivedU>
Eigen::VectorXd project(const Eigen::MatrixBase<DerivedR>& residual, const Eigen::MatrixBase<DerivedU>& basis) {
  return basis.transpose() * residual;
}

}  // namespace gcdc
