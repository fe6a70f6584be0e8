#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <vector>

#include "ice/measurement.hpp"
#include "ice/mixture.hpp"
#include "ice/square_root.hpp"
#include "ice/state_vector.hpp"

namespace ice {

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One measurement: the observed value, the connected variables, the
// measurement function and the noise model. When noise_mixture is set the
// most likely component is selected at every linearization (max-mixtures);
// otherwise the fixed Gaussian noise_cov applies.
struct Factor {
  Eigen::VectorXd observed;
  std::vector<VariableKey> variables;
  std::shared_ptr<const MeasurementModel> model;
  Eigen::MatrixXd noise_cov;
  std::shared_ptr<const MixtureModel> noise_mixture;
};

// One whitened block row of the stacked linear system.
struct WhitenedRow {
  Eigen::MatrixXd a;  // obs_dim x state_dim
  Eigen::VectorXd b;
  std::size_t factor_index = 0;
};

struct FactorGraph {
  std::vector<Factor> factors;
  std::map<VariableKey, Eigen::Index> variables;  // registry: key -> block dim

  void add_variable(const VariableKey& key, Eigen::Index dim);
  // Validates the factor's variables against the registry and appends it.
  void add_factor(Factor factor);
};

struct BatchConfig {
  int max_iterations = 20;
  double delta_tolerance = 1e-10;
  int max_step_halvings = 5;
};

// r = y - h(X) for the factor's connected blocks.
Eigen::VectorXd compute_residual(const Factor& factor, const StateVector& state);

// Gathers the factor's connected block values from the state.
BlockValues collect_blocks(const Factor& factor, const StateVector& state);

// The noise component used to whiten this factor at the given state: the
// max-mixture selection when a mixture is attached, the fixed Gaussian
// otherwise.
GaussianComponent select_noise_component(const Factor& factor, const StateVector& state);

// Whitens the factor by the given component: a = L^-1 J, b = L^-1 (r - mu)
// with cov = L L^T. The component mean recenters the residual so that
// ||b||^2 is the component's squared Mahalanobis distance.
WhitenedRow whiten(const Factor& factor, const StateVector& state,
                   const GaussianComponent& component, std::size_t factor_index = 0);

// Whitened rows for every factor, each scaled by sqrt(weight); zero-weight
// factors are omitted. Pass an empty weight vector for all-ones.
std::vector<WhitenedRow> linearize_all(const FactorGraph& graph, const StateVector& state,
                                       const std::vector<double>& weights = {});

// Vertically stacks whitened rows into (A, b) with state_dim columns.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> stack_rows(const std::vector<WhitenedRow>& rows,
                                                       Eigen::Index state_dim);

// Sum of weighted squared whitened residual norms at the given state.
double total_cost(const FactorGraph& graph, const StateVector& state,
                  const std::vector<double>& weights = {});

// Gauss-Newton with a cost-increase guard that halves the step. Throws
// SingularSystemError on rank loss and DivergenceError when halving cannot
// recover a non-increasing step.
StateVector solve_batch(const FactorGraph& graph, const StateVector& init,
                        const BatchConfig& config = {},
                        const std::vector<double>& weights = {});

}  // namespace ice
