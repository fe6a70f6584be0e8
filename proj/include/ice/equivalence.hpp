#pragma once

#include <Eigen/Dense>

namespace ice {

// Outcome of the two-sided component equivalence check used by the merge
// step: trace-based covariance statistic and Hotelling mean statistic.
struct EquivalenceVerdict {
  double W = 0.0;
  double T_squared = 0.0;
  bool cov_equal = false;
  bool mean_equal = false;
};

// Biased (1/m) sample covariance about the sample mean.
Eigen::MatrixXd sample_covariance_biased(const Eigen::MatrixXd& samples);

// Trace statistic for testing the sample covariance of whitened rows Y
// against the identity: W = (1/d) Tr((C - I)^2) - (d/m)((1/d) Tr C)^2 + d/m.
// Requires m > d.
double w_statistic(const Eigen::MatrixXd& Y);

// Scaled statistic m*W*d/2 versus the chi-squared quantile with d(d+1)/2
// degrees of freedom. Returns (statistic, accepted).
std::pair<double, bool> covariance_equivalent(const Eigen::MatrixXd& Y, double alpha_cov);

// Hotelling T^2 = m (mu_n - mu_g)^T cov_y^{-1} (mu_n - mu_g); accepted when
// ((m-d)/(d(m-1))) T^2 stays below the F(d, m-d) quantile.
std::pair<double, bool> mean_equivalent(const Eigen::VectorXd& mu_n, const Eigen::VectorXd& mu_g,
                                        const Eigen::MatrixXd& cov_y, Eigen::Index m,
                                        double alpha_mean);

}  // namespace ice
