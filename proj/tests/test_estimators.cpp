#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ice/benchmark.hpp"
#include "ice/estimators.hpp"
#include "ice/simulate.hpp"

using Eigen::Vector2d;

namespace {

ice::ScenarioConfig scenario(double epsilon, std::uint64_t seed, int epochs = 50) {
  ice::ScenarioConfig config;
  config.trajectory.n_epochs = epochs;
  config.trajectory.velocity = Vector2d(0.3, 0.15);
  config.trajectory.seed = seed;
  config.anchors = ice::ring_anchors(6, 40.0, Vector2d(8.0, 4.0));
  config.observation = ice::ObservationType::pseudorange;
  config.contamination.epsilon = epsilon;
  config.contamination.inflation = 100.0;
  config.seed = seed;
  return config;
}

ice::EstimatorConfig estimator(ice::EstimatorKind kind) {
  ice::EstimatorConfig config;
  config.kind = kind;
  config.session.refactor_period = 20;
  config.session.relinearize_threshold = 1.0;
  config.adaptation.T_c = 100;
  config.adaptation.fit.seed = 2;
  return config;
}

double max_error(const ice::EstimatorRun& run, const ice::Dataset& dataset) {
  double worst = 0.0;
  for (std::size_t t = 0; t < run.trajectory.size(); ++t)
    worst = std::max(worst, ice::rsos_error(run.trajectory[t], dataset.truth[t]));
  return worst;
}

}  // namespace

TEST_CASE("dcs_weight closed form") {
  CHECK(ice::dcs_weight(0.0, 9.0) == doctest::Approx(1.0));
  CHECK(ice::dcs_weight(9.0, 9.0) == doctest::Approx(1.0));  // boundary of the scaling region
  CHECK(ice::dcs_weight(27.0, 9.0) == doctest::Approx(0.25));  // s = 0.5, weight s^2
  CHECK_THROWS_AS(ice::dcs_weight(-1.0, 9.0), std::invalid_argument);
  CHECK_THROWS_AS(ice::dcs_weight(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("dcs weights stay in (0, 1] and decay monotonically") {
  double previous = 1.0;
  for (double e = 0.0; e < 400.0; e += 2.5) {
    const double w = ice::dcs_weight(e, 9.0);
    CHECK(w > 0.0);
    CHECK(w <= 1.0);
    CHECK(w <= previous + 1e-15);
    previous = w;
  }
}

TEST_CASE("clean dataset: all four estimators agree") {
  // Seeded so every whitened residual stays well inside the 3-sigma gate:
  // DCS weights saturate at 1, max-mixtures always selects the inlier
  // component and the adaptive gate rejects nothing.
  const auto dataset = ice::generate_observations(scenario(0.0, 407, 40));
  std::vector<ice::EstimatorRun> runs;
  for (const auto kind : {ice::EstimatorKind::L2, ice::EstimatorKind::DCS, ice::EstimatorKind::MM,
                          ice::EstimatorKind::ICE}) {
    runs.push_back(ice::run_estimator(estimator(kind), dataset));
  }
  for (std::size_t k = 1; k < runs.size(); ++k) {
    REQUIRE(runs[k].trajectory.size() == runs[0].trajectory.size());
    for (std::size_t t = 0; t < runs[0].trajectory.size(); ++t) {
      CHECK((runs[k].trajectory[t] - runs[0].trajectory[t]).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("a single gross outlier hurts L2 more than the robust estimators") {
  auto dataset = ice::generate_observations(scenario(0.0, 17, 40));
  // Inject one 40-sigma fault halfway through the run.
  auto& faulted = dataset.epochs[20].observations;
  for (auto& labeled : faulted) {
    if (labeled.observation.type == ice::ObservationType::pseudorange) {
      labeled.observation.value(0) += 40.0;
      labeled.is_outlier = true;
      break;
    }
  }

  const auto l2 = ice::run_estimator(estimator(ice::EstimatorKind::L2), dataset);
  const auto dcs = ice::run_estimator(estimator(ice::EstimatorKind::DCS), dataset);
  const auto mm = ice::run_estimator(estimator(ice::EstimatorKind::MM), dataset);
  const auto ice_run = ice::run_estimator(estimator(ice::EstimatorKind::ICE), dataset);

  const double l2_error = ice::rsos_error(l2.trajectory[20], dataset.truth[20]);
  CHECK(l2_error > ice::rsos_error(dcs.trajectory[20], dataset.truth[20]));
  CHECK(l2_error > ice::rsos_error(mm.trajectory[20], dataset.truth[20]));
  CHECK(l2_error > ice::rsos_error(ice_run.trajectory[20], dataset.truth[20]));
}

TEST_CASE("MM with zero outlier weight and identical covariances reduces to L2") {
  const auto dataset = ice::generate_observations(scenario(0.1, 23, 30));
  auto mm_config = estimator(ice::EstimatorKind::MM);
  mm_config.mm.outlier_weight = 0.0;
  mm_config.mm.outlier_inflation = 1.0;
  const auto mm = ice::run_estimator(mm_config, dataset);
  const auto l2 = ice::run_estimator(estimator(ice::EstimatorKind::L2), dataset);
  for (std::size_t t = 0; t < mm.trajectory.size(); ++t) {
    CHECK((mm.trajectory[t] - l2.trajectory[t]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("full inner IRLS refines the single-pass DCS weights") {
  auto dataset = ice::generate_observations(scenario(0.0, 17, 40));
  auto& faulted = dataset.epochs[20].observations;
  for (auto& labeled : faulted) {
    if (labeled.observation.type == ice::ObservationType::pseudorange) {
      labeled.observation.value(0) += 40.0;
      labeled.is_outlier = true;
      break;
    }
  }

  auto single_pass = estimator(ice::EstimatorKind::DCS);
  auto full = single_pass;
  full.dcs.full_irls = true;
  const auto single_run = ice::run_estimator(single_pass, dataset);
  const auto full_run = ice::run_estimator(full, dataset);

  const double single_err = ice::rsos_error(single_run.trajectory[20], dataset.truth[20]);
  const double full_err = ice::rsos_error(full_run.trajectory[20], dataset.truth[20]);
  // Converged reweighting suppresses the fault at least as well.
  CHECK(full_err <= single_err + 1e-9);
}

TEST_CASE("runs are deterministic per dataset and config") {
  const auto dataset = ice::generate_observations(scenario(0.2, 31, 40));
  for (const auto kind : {ice::EstimatorKind::L2, ice::EstimatorKind::DCS, ice::EstimatorKind::MM,
                          ice::EstimatorKind::ICE}) {
    const auto first = ice::run_estimator(estimator(kind), dataset);
    const auto second = ice::run_estimator(estimator(kind), dataset);
    REQUIRE(first.trajectory.size() == second.trajectory.size());
    for (std::size_t t = 0; t < first.trajectory.size(); ++t) {
      CHECK((first.trajectory[t] - second.trajectory[t]).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("contaminated stream: robust estimators dominate L2") {
  const auto dataset = ice::generate_observations(scenario(0.25, 37, 60));
  const auto l2 = ice::run_estimator(estimator(ice::EstimatorKind::L2), dataset);
  const auto ice_run = ice::run_estimator(estimator(ice::EstimatorKind::ICE), dataset);

  std::vector<double> l2_errors, ice_errors;
  for (std::size_t t = 0; t < l2.trajectory.size(); ++t) {
    l2_errors.push_back(ice::rsos_error(l2.trajectory[t], dataset.truth[t]));
    ice_errors.push_back(ice::rsos_error(ice_run.trajectory[t], dataset.truth[t]));
  }
  CHECK(ice::compute_statistics(ice_errors).median < ice::compute_statistics(l2_errors).median);
  CHECK(max_error(ice_run, dataset) < 10.0);
}

TEST_CASE("ICE reports track rejection counts") {
  const auto dataset = ice::generate_observations(scenario(0.3, 41, 50));
  const auto run = ice::run_estimator(estimator(ice::EstimatorKind::ICE), dataset);
  std::size_t inliers = 0, outliers = 0;
  for (const auto& report : run.reports) {
    inliers += report.n_inliers;
    outliers += report.n_outliers;
  }
  // 6 adaptive observations per epoch, partition is exhaustive.
  CHECK(inliers + outliers == dataset.epochs.size() * 6);
  CHECK(outliers > 0);
  CHECK(run.naive_adaptation_count >= run.adaptation_count);
}
