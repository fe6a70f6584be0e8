#include "ice/simulate.hpp"

#include <cmath>
#include <stdexcept>

#include "ice/rng.hpp"

namespace ice {

std::vector<Eigen::Vector2d> generate_trajectory(const TrajectoryConfig& config) {
  if (config.n_epochs < 2) throw std::invalid_argument("trajectory: need at least 2 epochs");
  std::vector<Eigen::Vector2d> positions;
  positions.reserve(config.n_epochs);
  switch (config.kind) {
    case TrajectoryKind::constant_velocity: {
      for (int t = 0; t < config.n_epochs; ++t)
        positions.push_back(config.start + t * config.velocity);
      break;
    }
    case TrajectoryKind::waypoints: {
      if (config.waypoints.size() < 2)
        throw std::invalid_argument("trajectory: need at least 2 waypoints");
      std::vector<double> cumulative{0.0};
      for (std::size_t i = 1; i < config.waypoints.size(); ++i)
        cumulative.push_back(cumulative.back() +
                             (config.waypoints[i] - config.waypoints[i - 1]).norm());
      const double total = cumulative.back();
      if (total <= 0.0) throw std::invalid_argument("trajectory: degenerate waypoint polyline");
      for (int t = 0; t < config.n_epochs; ++t) {
        const double s = total * t / (config.n_epochs - 1);
        std::size_t leg = 1;
        while (leg + 1 < cumulative.size() && cumulative[leg] < s) ++leg;
        const double leg_span = cumulative[leg] - cumulative[leg - 1];
        const double fraction = leg_span > 0.0 ? (s - cumulative[leg - 1]) / leg_span : 0.0;
        positions.push_back(config.waypoints[leg - 1] +
                            fraction * (config.waypoints[leg] - config.waypoints[leg - 1]));
      }
      break;
    }
    case TrajectoryKind::random_walk: {
      Eigen::Vector2d at = config.start;
      positions.push_back(at);
      for (int t = 1; t < config.n_epochs; ++t) {
        Rng rng = Rng::stream(config.seed, static_cast<std::uint64_t>(t));
        at += config.step_sigma * Eigen::Vector2d(rng.next_normal(), rng.next_normal());
        positions.push_back(at);
      }
      break;
    }
  }
  return positions;
}

std::vector<Eigen::Vector2d> ring_anchors(int count, double radius,
                                          const Eigen::Vector2d& center) {
  std::vector<Eigen::Vector2d> anchors;
  anchors.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double angle = 2.0 * M_PI * i / count;
    anchors.push_back(center + radius * Eigen::Vector2d(std::cos(angle), std::sin(angle)));
  }
  return anchors;
}

Dataset generate_observations(const ScenarioConfig& config) {
  if (config.anchors.size() < 3)
    throw std::invalid_argument("scenario: need at least 3 anchors for an observable system");
  if (config.contamination.epsilon < 0.0 || config.contamination.epsilon >= 1.0)
    throw std::invalid_argument("scenario: epsilon outside [0, 1)");
  if (config.contamination.epsilon > 0.0 && config.contamination.inflation <= 1.0)
    throw std::invalid_argument("scenario: covariance inflation must exceed 1");

  const auto positions = generate_trajectory(config.trajectory);
  const int n_epochs = static_cast<int>(positions.size());
  const bool clocked = config.observation == ObservationType::pseudorange;

  Dataset dataset;
  dataset.position_dim = 2;
  dataset.has_clock = clocked;
  dataset.metadata.seed = config.seed;
  dataset.metadata.epsilon = config.contamination.epsilon;
  dataset.metadata.inflation = config.contamination.inflation;
  for (const auto& anchor : config.anchors)
    dataset.metadata.anchors.push_back(Eigen::Vector3d(anchor.x(), anchor.y(), 0.0));

  // Truth clock bias evolves as a random walk matched to the process model.
  std::vector<double> clock(n_epochs, 0.0);
  if (clocked) {
    for (int t = 1; t < n_epochs; ++t) {
      Rng rng = Rng::stream(config.seed ^ 0xc10cULL, static_cast<std::uint64_t>(t));
      clock[t] = clock[t - 1] + config.clock_rw_sigma * rng.next_normal();
    }
  }

  dataset.truth.reserve(n_epochs);
  for (int t = 0; t < n_epochs; ++t) {
    Eigen::VectorXd truth(clocked ? 3 : 2);
    truth.head(2) = positions[t];
    if (clocked) truth(2) = clock[t];
    dataset.truth.push_back(truth);
  }

  const double outlier_offset_scalar =
      config.contamination.offset.size() > 0 ? config.contamination.offset(0) : 0.0;

  dataset.epochs.resize(n_epochs);
  for (int t = 0; t < n_epochs; ++t) {
    auto& epoch = dataset.epochs[t];
    epoch.index = t;
    Rng rng = Rng::stream(config.seed, static_cast<std::uint64_t>(t));

    if (t == 0) {
      // Anchor the start of the trajectory with priors.
      Observation position_prior;
      position_prior.type = ObservationType::prior;
      position_prior.anchor_id = 0;
      position_prior.value =
          positions[0] + config.prior_sigma * Eigen::Vector2d(rng.next_normal(), rng.next_normal());
      position_prior.cov =
          config.prior_sigma * config.prior_sigma * Eigen::MatrixXd::Identity(2, 2);
      epoch.observations.push_back({std::move(position_prior), false});

      if (clocked) {
        Observation clock_prior;
        clock_prior.type = ObservationType::prior;
        clock_prior.anchor_id = 1;
        clock_prior.value = Eigen::VectorXd::Constant(1, clock[0] + config.prior_sigma * rng.next_normal());
        clock_prior.cov =
            config.prior_sigma * config.prior_sigma * Eigen::MatrixXd::Identity(1, 1);
        epoch.observations.push_back({std::move(clock_prior), false});
      }
    } else {
      if (config.emit_between) {
        Observation between;
        between.type = ObservationType::between;
        between.anchor_id = 0;
        between.value = (positions[t] - positions[t - 1]) +
                        config.between_sigma * Eigen::Vector2d(rng.next_normal(), rng.next_normal());
        between.cov =
            config.between_sigma * config.between_sigma * Eigen::MatrixXd::Identity(2, 2);
        epoch.observations.push_back({std::move(between), false});
      }
      if (clocked) {
        // Clock process model: observed delta zero with random-walk scale.
        Observation clock_between;
        clock_between.type = ObservationType::between;
        clock_between.anchor_id = 1;
        clock_between.value = Eigen::VectorXd::Zero(1);
        clock_between.cov =
            config.clock_rw_sigma * config.clock_rw_sigma * Eigen::MatrixXd::Identity(1, 1);
        epoch.observations.push_back({std::move(clock_between), false});
      }
    }

    for (std::size_t a = 0; a < config.anchors.size(); ++a) {
      const double true_range = (positions[t] - config.anchors[a]).norm();
      const double truth_value = clocked ? true_range + clock[t] : true_range;
      const bool outlier = rng.next_double() < config.contamination.epsilon;
      double noise;
      if (outlier) {
        noise = outlier_offset_scalar +
                std::sqrt(config.contamination.inflation) * config.range_sigma * rng.next_normal();
      } else {
        noise = config.range_sigma * rng.next_normal();
      }
      Observation obs;
      obs.type = config.observation;
      obs.anchor_id = static_cast<int>(a);
      obs.anchor = Eigen::Vector3d(config.anchors[a].x(), config.anchors[a].y(), 0.0);
      obs.value = Eigen::VectorXd::Constant(1, truth_value + noise);
      obs.cov = config.range_sigma * config.range_sigma * Eigen::MatrixXd::Identity(1, 1);
      epoch.observations.push_back({std::move(obs), outlier});
    }
  }
  return dataset;
}

}  // namespace ice
