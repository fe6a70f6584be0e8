#include "ice/gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace ice {

GaussianComponent standard_component(Eigen::Index dim) {
  return {1.0, Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Identity(dim, dim)};
}

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& spd) {
  if (spd.rows() != spd.cols()) throw std::invalid_argument("cholesky: matrix not square");
  const Eigen::LLT<Eigen::MatrixXd> llt(spd);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("cholesky: matrix not positive definite");
  return llt.matrixL();
}

double mahalanobis_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                            const Eigen::MatrixXd& cov) {
  if (x.size() != mean.size() || cov.rows() != x.size())
    throw std::invalid_argument("mahalanobis: dimension mismatch");
  const Eigen::MatrixXd L = cholesky_lower(cov);
  const Eigen::VectorXd whitened =
      L.triangularView<Eigen::Lower>().solve((x - mean).eval());
  return whitened.norm();
}

double log_gaussian_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                            const Eigen::MatrixXd& cov) {
  if (x.size() != mean.size() || cov.rows() != x.size())
    throw std::invalid_argument("log_gaussian_density: dimension mismatch");
  const Eigen::Index d = x.size();
  const Eigen::MatrixXd L = cholesky_lower(cov);
  const Eigen::VectorXd whitened =
      L.triangularView<Eigen::Lower>().solve((x - mean).eval());
  const double log_det = 2.0 * L.diagonal().array().log().sum();
  return -0.5 * (d * std::log(2.0 * M_PI) + log_det + whitened.squaredNorm());
}

Eigen::MatrixXd floor_spd(const Eigen::MatrixXd& symmetric, double min_eigenvalue) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      0.5 * (symmetric + symmetric.transpose()));
  Eigen::VectorXd eigenvalues = solver.eigenvalues();
  bool changed = false;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    if (eigenvalues(i) < min_eigenvalue) {
      eigenvalues(i) = min_eigenvalue;
      changed = true;
    }
  }
  if (!changed) return 0.5 * (symmetric + symmetric.transpose());
  return solver.eigenvectors() * eigenvalues.asDiagonal() * solver.eigenvectors().transpose();
}

}  // namespace ice
