#pragma once

#include <Eigen/Dense>

namespace ice {

// One weighted Gaussian: w * N(mu, cov).
struct GaussianComponent {
  double weight = 1.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  Eigen::Index dim() const { return mean.size(); }
};

// Unit-weight standard normal of the given dimension.
GaussianComponent standard_component(Eigen::Index dim);

// Lower Cholesky factor of an SPD matrix; throws std::invalid_argument if
// the decomposition fails.
Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& spd);

// sqrt((x - mean)^T cov^{-1} (x - mean)).
double mahalanobis_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                            const Eigen::MatrixXd& cov);

double log_gaussian_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                            const Eigen::MatrixXd& cov);

// Clamps eigenvalues of a symmetric matrix from below; keeps near-degenerate
// sample covariances usable as SPD component covariances.
Eigen::MatrixXd floor_spd(const Eigen::MatrixXd& symmetric, double min_eigenvalue);

}  // namespace ice
