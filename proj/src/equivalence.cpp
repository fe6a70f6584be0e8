#include "ice/equivalence.hpp"

#include <stdexcept>

#include "ice/gaussian.hpp"
#include "ice/special_functions.hpp"

namespace ice {

Eigen::MatrixXd sample_covariance_biased(const Eigen::MatrixXd& samples) {
  const Eigen::Index m = samples.rows();
  if (m < 1) throw std::invalid_argument("sample_covariance: no samples");
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const Eigen::MatrixXd centered = samples.rowwise() - mean;
  return (centered.transpose() * centered) / static_cast<double>(m);
}

double w_statistic(const Eigen::MatrixXd& Y) {
  const Eigen::Index m = Y.rows();
  const Eigen::Index d = Y.cols();
  if (m <= d) throw std::invalid_argument("w_statistic: need more samples than dimensions");
  const Eigen::MatrixXd cov = sample_covariance_biased(Y);
  const Eigen::MatrixXd deviation = cov - Eigen::MatrixXd::Identity(d, d);
  const double md = static_cast<double>(m);
  const double dd = static_cast<double>(d);
  const double mean_trace = cov.trace() / dd;
  return (deviation * deviation).trace() / dd - (dd / md) * mean_trace * mean_trace + dd / md;
}

std::pair<double, bool> covariance_equivalent(const Eigen::MatrixXd& Y, double alpha_cov) {
  if (alpha_cov <= 0.0 || alpha_cov >= 1.0)
    throw std::invalid_argument("covariance_equivalent: alpha outside (0, 1)");
  const double m = static_cast<double>(Y.rows());
  const double d = static_cast<double>(Y.cols());
  const double statistic = m * w_statistic(Y) * d / 2.0;
  const double dof = d * (d + 1.0) / 2.0;
  const double critical = chi_squared_quantile(1.0 - alpha_cov, dof);
  return {statistic, statistic < critical};
}

std::pair<double, bool> mean_equivalent(const Eigen::VectorXd& mu_n, const Eigen::VectorXd& mu_g,
                                        const Eigen::MatrixXd& cov_y, Eigen::Index m,
                                        double alpha_mean) {
  const Eigen::Index d = mu_n.size();
  if (mu_g.size() != d || cov_y.rows() != d || cov_y.cols() != d)
    throw std::invalid_argument("mean_equivalent: dimension mismatch");
  if (m <= d) throw std::invalid_argument("mean_equivalent: need more samples than dimensions");
  if (alpha_mean <= 0.0 || alpha_mean >= 1.0)
    throw std::invalid_argument("mean_equivalent: alpha outside (0, 1)");

  const Eigen::MatrixXd L = cholesky_lower(cov_y);
  const Eigen::VectorXd whitened =
      L.triangularView<Eigen::Lower>().solve((mu_n - mu_g).eval());
  const double md = static_cast<double>(m);
  const double dd = static_cast<double>(d);
  const double t_squared = md * whitened.squaredNorm();
  const double scaled = (md - dd) / (dd * (md - 1.0)) * t_squared;
  const double critical = f_quantile(1.0 - alpha_mean, dd, md - dd);
  return {t_squared, scaled < critical};
}

}  // namespace ice
