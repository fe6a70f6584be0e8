#include "ice/incremental.hpp"

namespace ice {

void IncrementalSession::add_variable(const VariableKey& key, const Eigen::VectorXd& initial) {
  graph_.add_variable(key, initial.size());
  lin_point_.add(key, initial);
  estimate_.add(key, initial);
}

const StateVector& IncrementalSession::update(std::vector<Factor> factors,
                                              std::vector<double> weights) {
  if (!weights.empty() && weights.size() != factors.size())
    throw std::invalid_argument("update: weight count mismatch");
  if (factors.empty() && system_.dimension() == lin_point_.dim()) return estimate_;

  system_.expand(lin_point_.dim());

  const std::size_t first_new = graph_.factors.size();
  for (auto& factor : factors) graph_.add_factor(std::move(factor));
  for (std::size_t i = 0; i < factors.size(); ++i)
    weights_.push_back(weights.empty() ? 1.0 : weights[i]);

  if (graph_.factors.size() > first_new) {
    std::vector<WhitenedRow> rows;
    rows.reserve(graph_.factors.size() - first_new);
    for (std::size_t n = first_new; n < graph_.factors.size(); ++n) {
      if (weights_[n] == 0.0) continue;
      const auto component = select_noise_component(graph_.factors[n], lin_point_);
      WhitenedRow row = whiten(graph_.factors[n], lin_point_, component, n);
      if (weights_[n] != 1.0) {
        const double scale = std::sqrt(weights_[n]);
        row.a *= scale;
        row.b *= scale;
      }
      rows.push_back(std::move(row));
    }
    const auto [A, b] = stack_rows(rows, lin_point_.dim());
    givens_augment_in_place<double>(system_, A, b);
  }

  solve_current();
  ++update_count_;

  const bool period_hit =
      config_.refactor_period > 0 && update_count_ % config_.refactor_period == 0;
  const bool drifted = estimate_.max_block_distance(lin_point_) > config_.relinearize_threshold;
  if (period_hit || drifted) refactor();
  return estimate_;
}

void IncrementalSession::refactor() {
  if (graph_.factors.empty()) return;
  lin_point_ = estimate_;
  const auto rows = linearize_all(graph_, lin_point_, weights_);
  const auto [A, b] = stack_rows(rows, lin_point_.dim());
  system_ = qr_factorize(A, b);
  ++refactor_count_;
  solve_current();
}

void IncrementalSession::refactor_with_weights(std::vector<double> weights) {
  if (weights.size() != graph_.factors.size())
    throw std::invalid_argument("refactor_with_weights: weight count mismatch");
  weights_ = std::move(weights);
  refactor();
}

void IncrementalSession::solve_current() {
  const Eigen::VectorXd delta = back_substitute(system_);
  estimate_ = lin_point_.with_delta(delta);
}

}  // namespace ice
