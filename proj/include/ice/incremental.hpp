#pragma once

#include "ice/factor_graph.hpp"

namespace ice {

struct SessionConfig {
  // Full relinearization plus batch refactorization every this many update
  // calls that fold in new factors.
  int refactor_period = 10;
  // Also refactor whenever any variable block moved this far (infinity
  // norm) from its linearization point.
  double relinearize_threshold = 0.1;
};

// Incremental least-squares session: keeps the square-root system current as
// factors stream in. New rows are folded in with Givens rotations; a full
// batch refactorization at the current estimate runs periodically and when
// the estimate drifts from the linearization point.
class IncrementalSession {
 public:
  explicit IncrementalSession(SessionConfig config = {}) : config_(config) {}

  // Registers a new variable; the initial value becomes its linearization
  // point until the next refactorization.
  void add_variable(const VariableKey& key, const Eigen::VectorXd& initial);

  // Folds new factors into the system and re-solves. Weights scale the
  // whitened rows (per-factor robust weights); empty means all ones. An
  // update with no new factors and no pending variables is a no-op.
  const StateVector& update(std::vector<Factor> factors, std::vector<double> weights = {});

  // Relinearizes every factor at the current estimate and refactors.
  void refactor();

  // Replaces the per-factor weights and refactors; used by inner IRLS loops.
  void refactor_with_weights(std::vector<double> weights);

  const std::vector<double>& factor_weights() const { return weights_; }

  const StateVector& estimate() const { return estimate_; }
  const StateVector& linearization_point() const { return lin_point_; }
  const FactorGraph& graph() const { return graph_; }
  const SquareRootSystemd& system() const { return system_; }
  int update_count() const { return update_count_; }
  int refactor_count() const { return refactor_count_; }

 private:
  void solve_current();

  SessionConfig config_;
  FactorGraph graph_;
  StateVector lin_point_;
  StateVector estimate_;
  SquareRootSystemd system_;
  std::vector<double> weights_;
  int update_count_ = 0;
  int refactor_count_ = 0;
};

}  // namespace ice
