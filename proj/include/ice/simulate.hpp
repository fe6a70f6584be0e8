#pragma once

#include "ice/dataset.hpp"

namespace ice {

enum class TrajectoryKind { constant_velocity, waypoints, random_walk };

struct TrajectoryConfig {
  TrajectoryKind kind = TrajectoryKind::constant_velocity;
  int n_epochs = 100;
  std::uint64_t seed = 0;
  Eigen::Vector2d start = Eigen::Vector2d::Zero();
  Eigen::Vector2d velocity = Eigen::Vector2d(1.0, 0.0);  // constant-velocity mode
  std::vector<Eigen::Vector2d> waypoints;  // polyline, traversed at uniform arc length
  double step_sigma = 0.5;                 // random-walk mode
};

// Smooth deterministic 2D ground-truth positions, one per epoch.
std::vector<Eigen::Vector2d> generate_trajectory(const TrajectoryConfig& config);

struct ContaminationSpec {
  double epsilon = 0.0;    // outlier rate in [0, 1)
  double inflation = 100.0;  // covariance inflation factor k > 1
  Eigen::VectorXd offset;  // outlier mean offset; empty means zero
};

struct ScenarioConfig {
  TrajectoryConfig trajectory;
  std::vector<Eigen::Vector2d> anchors;
  ObservationType observation = ObservationType::pseudorange;
  double range_sigma = 1.0;
  double between_sigma = 0.1;
  double clock_rw_sigma = 0.1;   // clock random-walk scale (pseudorange mode)
  double prior_sigma = 0.5;
  bool emit_between = true;      // odometry chain between consecutive epochs
  ContaminationSpec contamination;
  std::uint64_t seed = 0;
};

// Ring of `count` anchors around the given center.
std::vector<Eigen::Vector2d> ring_anchors(int count, double radius,
                                          const Eigen::Vector2d& center = Eigen::Vector2d::Zero());

// Builds the complete synthetic dataset: ground truth trajectory (plus a
// clock random walk in pseudorange mode), prior/between process
// observations, and contaminated range or pseudorange observations with
// their true labels recorded for diagnostics.
Dataset generate_observations(const ScenarioConfig& config);

}  // namespace ice
