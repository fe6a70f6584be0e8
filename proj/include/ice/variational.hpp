#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ice/mixture.hpp"

namespace ice {

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VariationalConfig {
  int max_components = 5;
  int max_iterations = 200;
  double elbo_tolerance = 1e-6;  // relative change stopping rule
  double prune_weight = 0.01;    // drop components with expected weight below this
  std::uint64_t seed = 0;        // k-means++ seeding
  std::size_t min_points = 0;    // 0 selects the default 2 * d * max_components
};

struct VariationalFit {
  MixtureModel model;                 // pruned, weights renormalized
  std::vector<int> assignments;       // per point, index into model.components
  std::vector<int> component_counts;  // hard-assigned points per component
  std::vector<double> elbo_history;   // one entry per iteration
  int iterations = 0;
};

// Fits a finite variational Bayesian GMM (Dirichlet weights, Normal -
// inverse-Wishart component parameters) to the rows of `residuals`.
// Components whose expected weight falls below config.prune_weight are
// dropped and the rest renormalized. Throws FitError when fewer than
// min_points rows are supplied or the optimization degenerates.
VariationalFit fit_mixture_variational(const Eigen::MatrixXd& residuals,
                                       const VariationalConfig& config = {});

}  // namespace ice
