#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ice/incremental.hpp"
#include "ice/rng.hpp"

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

ice::Factor prior_factor(const ice::VariableKey& key, const VectorXd& value, double sigma) {
  ice::Factor factor;
  factor.observed = value;
  factor.variables = {key};
  factor.model = std::make_shared<ice::PriorModel>(value.size());
  factor.noise_cov = sigma * sigma * MatrixXd::Identity(value.size(), value.size());
  return factor;
}

ice::Factor between_factor(const ice::VariableKey& a, const ice::VariableKey& b,
                           const VectorXd& delta, double sigma) {
  ice::Factor factor;
  factor.observed = delta;
  factor.variables = {a, b};
  factor.model = std::make_shared<ice::BetweenModel>(delta.size());
  factor.noise_cov = sigma * sigma * MatrixXd::Identity(delta.size(), delta.size());
  return factor;
}

ice::Factor range_factor(const ice::VariableKey& key, const Vector2d& anchor, double observed,
                         double sigma) {
  ice::Factor factor;
  factor.observed = VectorXd::Constant(1, observed);
  factor.variables = {key};
  factor.model = std::make_shared<ice::RangeModel>(anchor);
  factor.noise_cov = sigma * sigma * MatrixXd::Identity(1, 1);
  return factor;
}

// Random linear chain: priors plus between factors with random values.
struct LinearProblem {
  std::vector<std::vector<ice::Factor>> epochs;  // factors arriving per epoch
  std::vector<std::pair<ice::VariableKey, VectorXd>> variables;
};

LinearProblem random_linear_problem(ice::Rng& rng, int n_epochs, int block_dim) {
  LinearProblem problem;
  problem.epochs.resize(n_epochs);
  for (int t = 0; t < n_epochs; ++t) {
    const ice::VariableKey key{"x", t};
    problem.variables.emplace_back(key, VectorXd::Zero(block_dim));
    if (t == 0) {
      problem.epochs[t].push_back(prior_factor(key, rng.next_normal_vector(block_dim), 1.0));
    } else {
      problem.epochs[t].push_back(
          between_factor({"x", t - 1}, key, rng.next_normal_vector(block_dim), 0.7));
      // Extra loose prior keeps every epoch well conditioned.
      problem.epochs[t].push_back(prior_factor(key, rng.next_normal_vector(block_dim), 3.0));
    }
  }
  return problem;
}

}  // namespace

TEST_CASE("feeding epochs one at a time matches one batch solve on linear graphs") {
  ice::Rng rng(71);
  for (int trial = 0; trial < 5; ++trial) {
    const int n_epochs = 4 + static_cast<int>(rng.next_index(4));
    const auto problem = random_linear_problem(rng, n_epochs, 2);

    ice::IncrementalSession session({.refactor_period = 1000, .relinearize_threshold = 1e9});
    ice::FactorGraph batch_graph;
    ice::StateVector init;
    for (int t = 0; t < n_epochs; ++t) {
      const auto& [key, value] = problem.variables[t];
      session.add_variable(key, value);
      batch_graph.add_variable(key, value.size());
      init.add(key, value);
      session.update(problem.epochs[t]);
    }
    for (const auto& epoch : problem.epochs)
      for (const auto& factor : epoch) batch_graph.add_factor(factor);

    const auto batch = ice::solve_batch(batch_graph, init);
    for (const auto& [key, value] : problem.variables) {
      CHECK((session.estimate().at(key) - batch.at(key)).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("empty update leaves the state unchanged") {
  ice::IncrementalSession session;
  session.add_variable({"x", 0}, Vector2d(0.0, 0.0));
  session.update({prior_factor({"x", 0}, Vector2d(1.0, 2.0), 1.0)});
  const VectorXd before = session.estimate().flatten();
  session.update({});
  CHECK((session.estimate().flatten() - before).norm() == 0.0);
}

TEST_CASE("incremental refactorization matches a single Gauss-Newton step") {
  // Nonlinear graph: after refactor() the estimate must equal one batch
  // linearization step from the same linearization point.
  const std::vector<Vector2d> anchors = {{0.0, 0.0}, {10.0, 0.0}, {0.0, 10.0}, {7.0, 9.0}};
  const Vector2d truth(3.0, 4.0);

  ice::IncrementalSession session({.refactor_period = 1000, .relinearize_threshold = 1e9});
  session.add_variable({"x", 0}, Vector2d(2.5, 4.5));
  std::vector<ice::Factor> factors;
  for (const auto& anchor : anchors)
    factors.push_back(range_factor({"x", 0}, anchor, (truth - anchor).norm(), 1.0));
  session.update(factors);

  const ice::StateVector lin_point = session.estimate();  // refactor relinearizes here
  session.refactor();

  ice::FactorGraph graph;
  graph.add_variable({"x", 0}, 2);
  for (const auto& factor : factors) graph.add_factor(factor);
  const auto rows = ice::linearize_all(graph, lin_point);
  const auto [A, b] = ice::stack_rows(rows, lin_point.dim());
  const auto sys = ice::qr_factorize(A, b);
  const ice::StateVector expected = lin_point.with_delta(ice::back_substitute(sys));

  CHECK((session.estimate().at({"x", 0}) - expected.at({"x", 0})).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("periodic refactorization fires on the configured period") {
  ice::IncrementalSession session({.refactor_period = 2, .relinearize_threshold = 1e9});
  session.add_variable({"x", 0}, VectorXd::Zero(1));
  session.update({prior_factor({"x", 0}, VectorXd::Constant(1, 1.0), 1.0)});
  CHECK(session.refactor_count() == 0);
  session.update({prior_factor({"x", 0}, VectorXd::Constant(1, 1.0), 1.0)});
  CHECK(session.refactor_count() == 1);
}

TEST_CASE("drift beyond the relinearization threshold triggers refactorization") {
  ice::IncrementalSession session({.refactor_period = 1000, .relinearize_threshold = 0.5});
  session.add_variable({"x", 0}, VectorXd::Zero(1));
  // Prior pulls the estimate 3 units from the linearization point.
  session.update({prior_factor({"x", 0}, VectorXd::Constant(1, 3.0), 1.0)});
  CHECK(session.refactor_count() == 1);
  CHECK(session.linearization_point().at({"x", 0})(0) == doctest::Approx(3.0));
}

TEST_CASE("weights fold into the incremental system") {
  ice::IncrementalSession session;
  session.add_variable({"x", 0}, VectorXd::Zero(1));
  session.update({prior_factor({"x", 0}, VectorXd::Constant(1, 0.0), 1.0),
                  prior_factor({"x", 0}, VectorXd::Constant(1, 10.0), 1.0)},
                 {1.0, 0.0});
  // Zero-weight factor contributes nothing.
  CHECK(session.estimate().at({"x", 0})(0) == doctest::Approx(0.0));
}
