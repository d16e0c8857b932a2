#include "gcdc/pca.hpp"

#include <Eigen/Eigenvalues>

#include "gcdc/error.hpp"

namespace gcdc {

PcaBasis basis_from_moment(const Eigen::MatrixXd& moment) {
  require(moment.rows() == moment.cols() && moment.rows() >= 1, Errc::invalid_argument,
          "second-moment matrix must be square and non-empty");
  const Eigen::Index d = moment.rows();
  PcaBasis out;
  if (moment.isZero(0.0)) {
    out.basis = Eigen::MatrixXd::Identity(d, d);
    out.eigenvalues = Eigen::VectorXd::Zero(d);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(moment);
  require(solver.info() == Eigen::Success, Errc::numerical_failure, "eigensolver did not converge");

  // Eigen returns ascending order.
  out.basis = solver.eigenvectors().rowwise().reverse();
  out.eigenvalues = solver.eigenvalues().reverse().cwiseMax(0.0);
  // Sign convention: largest-magnitude entry of each column is positive.
  for (Eigen::Index j = 0; j < d; ++j) {
    Eigen::Index at = 0;
    out.basis.col(j).cwiseAbs().maxCoeff(&at);
    if (out.basis(at, j) < 0.0) out.basis.col(j) *= -1.0;
  }
  return out;
}

}  // namespace gcdc
