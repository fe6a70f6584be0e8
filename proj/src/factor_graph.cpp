#include "ice/factor_graph.hpp"

#include <cmath>

namespace ice {

void FactorGraph::add_variable(const VariableKey& key, Eigen::Index dim) {
  if (variables.count(key)) throw std::invalid_argument("duplicate variable " + to_string(key));
  if (dim <= 0) throw std::invalid_argument("variable dimension must be positive");
  variables[key] = dim;
}

void FactorGraph::add_factor(Factor factor) {
  if (!factor.model) throw std::invalid_argument("factor without measurement model");
  for (const auto& key : factor.variables) {
    if (!variables.count(key))
      throw std::invalid_argument("factor references unknown variable " + to_string(key));
  }
  const Eigen::Index obs_dim = factor.model->observation_dim();
  if (factor.observed.size() != obs_dim)
    throw std::invalid_argument("observed value dimension mismatch");
  if (factor.noise_mixture) {
    if (factor.noise_mixture->dim() != obs_dim)
      throw std::invalid_argument("noise mixture dimension mismatch");
  } else if (factor.noise_cov.rows() != obs_dim || factor.noise_cov.cols() != obs_dim) {
    throw std::invalid_argument("noise covariance dimension mismatch");
  }
  factors.push_back(std::move(factor));
}

BlockValues collect_blocks(const Factor& factor, const StateVector& state) {
  BlockValues blocks;
  blocks.reserve(factor.variables.size());
  for (const auto& key : factor.variables) blocks.push_back(state.at(key));
  return blocks;
}

Eigen::VectorXd compute_residual(const Factor& factor, const StateVector& state) {
  const Eigen::VectorXd predicted = factor.model->evaluate(collect_blocks(factor, state));
  if (!predicted.allFinite())
    throw std::runtime_error("measurement function produced non-finite output");
  return factor.observed - predicted;
}

GaussianComponent select_noise_component(const Factor& factor, const StateVector& state) {
  if (factor.noise_mixture) {
    const Eigen::VectorXd residual = compute_residual(factor, state);
    const std::size_t index = max_mix_select(*factor.noise_mixture, residual);
    return factor.noise_mixture->components[index];
  }
  return {1.0, Eigen::VectorXd::Zero(factor.observed.size()), factor.noise_cov};
}

WhitenedRow whiten(const Factor& factor, const StateVector& state,
                   const GaussianComponent& component, std::size_t factor_index) {
  const BlockValues blocks = collect_blocks(factor, state);
  const Eigen::VectorXd residual = factor.observed - factor.model->evaluate(blocks);
  const std::vector<Eigen::MatrixXd> jacobians = factor.model->jacobians(blocks);

  const Eigen::MatrixXd L = cholesky_lower(component.cov);
  const auto lower = L.triangularView<Eigen::Lower>();

  WhitenedRow row;
  row.factor_index = factor_index;
  row.b = lower.solve((residual - component.mean).eval());
  row.a = Eigen::MatrixXd::Zero(factor.model->observation_dim(), state.dim());
  for (std::size_t i = 0; i < factor.variables.size(); ++i) {
    const Eigen::Index offset = state.offset_of(factor.variables[i]);
    row.a.middleCols(offset, jacobians[i].cols()) = lower.solve(jacobians[i]);
  }
  return row;
}

std::vector<WhitenedRow> linearize_all(const FactorGraph& graph, const StateVector& state,
                                       const std::vector<double>& weights) {
  if (!weights.empty() && weights.size() != graph.factors.size())
    throw std::invalid_argument("weight count does not match factor count");
  std::vector<WhitenedRow> rows;
  rows.reserve(graph.factors.size());
  for (std::size_t n = 0; n < graph.factors.size(); ++n) {
    const double weight = weights.empty() ? 1.0 : weights[n];
    if (weight < 0.0 || weight > 1.0) throw std::invalid_argument("weights must lie in [0, 1]");
    if (weight == 0.0) continue;
    const auto component = select_noise_component(graph.factors[n], state);
    WhitenedRow row = whiten(graph.factors[n], state, component, n);
    if (weight != 1.0) {
      const double scale = std::sqrt(weight);
      row.a *= scale;
      row.b *= scale;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> stack_rows(const std::vector<WhitenedRow>& rows,
                                                       Eigen::Index state_dim) {
  Eigen::Index total = 0;
  for (const auto& row : rows) total += row.b.size();
  Eigen::MatrixXd A(total, state_dim);
  Eigen::VectorXd b(total);
  Eigen::Index at = 0;
  for (const auto& row : rows) {
    A.middleRows(at, row.b.size()) = row.a;
    b.segment(at, row.b.size()) = row.b;
    at += row.b.size();
  }
  return {std::move(A), std::move(b)};
}

double total_cost(const FactorGraph& graph, const StateVector& state,
                  const std::vector<double>& weights) {
  double cost = 0.0;
  for (std::size_t n = 0; n < graph.factors.size(); ++n) {
    const double weight = weights.empty() ? 1.0 : weights[n];
    if (weight == 0.0) continue;
    const auto component = select_noise_component(graph.factors[n], state);
    const Eigen::VectorXd residual = compute_residual(graph.factors[n], state);
    const Eigen::MatrixXd L = cholesky_lower(component.cov);
    const Eigen::VectorXd whitened =
        L.triangularView<Eigen::Lower>().solve((residual - component.mean).eval());
    cost += weight * whitened.squaredNorm();
  }
  return cost;
}

StateVector solve_batch(const FactorGraph& graph, const StateVector& init,
                        const BatchConfig& config, const std::vector<double>& weights) {
  if (graph.factors.empty()) throw std::invalid_argument("solve_batch: empty graph");
  StateVector state = init;
  double cost = total_cost(graph, state, weights);

  for (int iteration = 0; iteration < config.max_iterations; ++iteration) {
    const auto rows = linearize_all(graph, state, weights);
    const auto [A, b] = stack_rows(rows, state.dim());
    const auto sys = qr_factorize(A, b);
    Eigen::VectorXd delta = back_substitute(sys);

    StateVector candidate = state.with_delta(delta);
    double candidate_cost = total_cost(graph, candidate, weights);
    int halvings = 0;
    while (candidate_cost > cost && halvings < config.max_step_halvings) {
      delta *= 0.5;
      candidate = state.with_delta(delta);
      candidate_cost = total_cost(graph, candidate, weights);
      ++halvings;
    }
    if (candidate_cost > cost * (1.0 + 1e-12) + 1e-15)
      throw DivergenceError("solve_batch: cost increased after " +
                            std::to_string(halvings) + " step halvings");

    state = std::move(candidate);
    cost = candidate_cost;
    if (delta.norm() < config.delta_tolerance) break;
  }
  return state;
}

}  // namespace ice
