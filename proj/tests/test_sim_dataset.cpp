#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ice/simulate.hpp"

using Eigen::Vector2d;

namespace {

ice::ScenarioConfig small_scenario(double epsilon, std::uint64_t seed) {
  ice::ScenarioConfig config;
  config.trajectory.n_epochs = 40;
  config.trajectory.velocity = Vector2d(0.4, 0.2);
  config.trajectory.seed = seed;
  config.anchors = ice::ring_anchors(6, 50.0);
  config.observation = ice::ObservationType::pseudorange;
  config.contamination.epsilon = epsilon;
  config.contamination.inflation = 100.0;
  config.seed = seed;
  return config;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("constant-velocity trajectory") {
  ice::TrajectoryConfig config;
  config.n_epochs = 10;
  config.velocity = Vector2d(1.0, 0.0);
  const auto positions = ice::generate_trajectory(config);
  REQUIRE(positions.size() == 10);
  for (int t = 0; t < 10; ++t) {
    CHECK(positions[t].x() == doctest::Approx(static_cast<double>(t)));
    CHECK(positions[t].y() == doctest::Approx(0.0));
  }
}

TEST_CASE("trajectories are deterministic per seed") {
  ice::TrajectoryConfig config;
  config.kind = ice::TrajectoryKind::random_walk;
  config.n_epochs = 50;
  config.seed = 77;
  const auto a = ice::generate_trajectory(config);
  const auto b = ice::generate_trajectory(config);
  for (std::size_t t = 0; t < a.size(); ++t) CHECK((a[t] - b[t]).norm() == 0.0);
  config.seed = 78;
  const auto c = ice::generate_trajectory(config);
  CHECK((a[10] - c[10]).norm() > 0.0);
}

TEST_CASE("random-walk step statistics match the configured scale") {
  ice::TrajectoryConfig config;
  config.kind = ice::TrajectoryKind::random_walk;
  config.n_epochs = 10000;
  config.step_sigma = 0.5;
  config.seed = 5;
  const auto positions = ice::generate_trajectory(config);
  double sum_sq = 0.0;
  for (std::size_t t = 1; t < positions.size(); ++t)
    sum_sq += (positions[t] - positions[t - 1]).squaredNorm();
  // Each step has expected squared norm 2 sigma^2.
  const double mean_sq = sum_sq / (positions.size() - 1);
  CHECK(mean_sq == doctest::Approx(2.0 * 0.25).epsilon(0.05));
}

TEST_CASE("trajectory rejects fewer than two epochs") {
  ice::TrajectoryConfig config;
  config.n_epochs = 1;
  CHECK_THROWS_AS(ice::generate_trajectory(config), std::invalid_argument);
}

TEST_CASE("waypoint trajectory walks the polyline at uniform arc length") {
  ice::TrajectoryConfig config;
  config.kind = ice::TrajectoryKind::waypoints;
  config.n_epochs = 7;
  config.waypoints = {Vector2d(0.0, 0.0), Vector2d(2.0, 0.0), Vector2d(2.0, 4.0)};
  const auto positions = ice::generate_trajectory(config);
  REQUIRE(positions.size() == 7);
  CHECK((positions.front() - Vector2d(0.0, 0.0)).norm() < 1e-12);
  CHECK((positions.back() - Vector2d(2.0, 4.0)).norm() < 1e-12);
  // Total length 6 over 6 steps: the corner sits exactly two steps in.
  CHECK((positions[2] - Vector2d(2.0, 0.0)).norm() < 1e-12);
  for (std::size_t t = 1; t < positions.size(); ++t)
    CHECK((positions[t] - positions[t - 1]).norm() == doctest::Approx(1.0));

  config.waypoints = {Vector2d(0.0, 0.0)};
  CHECK_THROWS_AS(ice::generate_trajectory(config), std::invalid_argument);
}

TEST_CASE("clean scenario labels everything inlier and covariance matches") {
  auto config = small_scenario(0.0, 11);
  config.trajectory.n_epochs = 1500;
  const auto dataset = ice::generate_observations(config);

  double sum_sq = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < dataset.epochs.size(); ++t) {
    for (const auto& labeled : dataset.epochs[t].observations) {
      CHECK_FALSE(labeled.is_outlier);
      if (labeled.observation.type != ice::ObservationType::pseudorange) continue;
      const auto& truth = dataset.truth[t];
      const double predicted =
          (truth.head(2) - labeled.observation.anchor.head(2)).norm() + truth(2);
      const double residual = labeled.observation.value(0) - predicted;
      sum_sq += residual * residual;
      ++count;
    }
  }
  REQUIRE(count >= 9000);
  // Residuals at the truth have variance sigma^2 = 1 within 10%.
  CHECK(sum_sq / count == doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("contamination rate matches the binomial count") {
  auto config = small_scenario(0.2, 13);
  config.trajectory.n_epochs = 1250;  // 1250 * 6 = 7500 range observations
  const auto dataset = ice::generate_observations(config);
  std::size_t outliers = 0;
  std::size_t total = 0;
  for (const auto& epoch : dataset.epochs) {
    for (const auto& labeled : epoch.observations) {
      if (labeled.observation.type != ice::ObservationType::pseudorange) continue;
      ++total;
      if (labeled.is_outlier) ++outliers;
    }
  }
  CHECK(static_cast<double>(outliers) / total == doctest::Approx(0.2).epsilon(0.05));
}

TEST_CASE("outlier residual covariance is inflated by k") {
  auto config = small_scenario(0.5, 17);
  config.trajectory.n_epochs = 2000;
  config.contamination.inflation = 100.0;
  const auto dataset = ice::generate_observations(config);
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < dataset.epochs.size(); ++t) {
    for (const auto& labeled : dataset.epochs[t].observations) {
      if (!labeled.is_outlier) continue;
      const auto& truth = dataset.truth[t];
      const double predicted =
          (truth.head(2) - labeled.observation.anchor.head(2)).norm() + truth(2);
      const double residual = labeled.observation.value(0) - predicted;
      sum_sq += residual * residual;
      ++count;
    }
  }
  REQUIRE(count > 2000);
  CHECK(sum_sq / count == doctest::Approx(100.0).epsilon(0.15));
}

template <typename T>
constexpr bool carries_label = requires(T o) { o.is_outlier; };

TEST_CASE("estimator-facing view carries no labels") {
  const auto dataset = ice::generate_observations(small_scenario(0.3, 19));
  const auto view = dataset.epoch_view(0);
  CHECK(view.size() == dataset.epochs[0].observations.size());
  // Compile-time separation: the view type drops the diagnostic label.
  static_assert(carries_label<ice::LabeledObservation>);
  static_assert(!carries_label<ice::Observation>);
}

TEST_CASE("save then load reproduces the dataset bit exactly") {
  const auto dataset = ice::generate_observations(small_scenario(0.25, 23));
  const auto path = temp_file("ice_dataset_roundtrip.csv");
  ice::save_dataset(dataset, path.string());
  const auto loaded = ice::load_dataset(path.string());

  REQUIRE(loaded.epochs.size() == dataset.epochs.size());
  REQUIRE(loaded.truth.size() == dataset.truth.size());
  CHECK(loaded.position_dim == dataset.position_dim);
  CHECK(loaded.has_clock == dataset.has_clock);
  CHECK(loaded.metadata.seed == dataset.metadata.seed);
  CHECK(loaded.metadata.epsilon == dataset.metadata.epsilon);

  for (std::size_t t = 0; t < dataset.truth.size(); ++t) {
    CHECK((loaded.truth[t] - dataset.truth[t]).cwiseAbs().maxCoeff() == 0.0);
  }
  for (std::size_t t = 0; t < dataset.epochs.size(); ++t) {
    REQUIRE(loaded.epochs[t].observations.size() == dataset.epochs[t].observations.size());
    for (std::size_t i = 0; i < dataset.epochs[t].observations.size(); ++i) {
      const auto& a = dataset.epochs[t].observations[i];
      const auto& b = loaded.epochs[t].observations[i];
      CHECK(a.is_outlier == b.is_outlier);
      CHECK(a.observation.type == b.observation.type);
      CHECK(a.observation.anchor_id == b.observation.anchor_id);
      CHECK((a.observation.value - b.observation.value).cwiseAbs().maxCoeff() == 0.0);
      CHECK((a.observation.cov - b.observation.cov).cwiseAbs().maxCoeff() == 0.0);
      CHECK((a.observation.anchor - b.observation.anchor).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("schema violations name the column and line") {
  const auto path = temp_file("ice_dataset_bad.csv");

  SUBCASE("missing header column") {
    std::ofstream out(path);
    out << "epoch,type,anchor_id,ax,ay,az,label\n";  // dim column missing
    out.close();
    CHECK_THROWS_WITH_AS(ice::load_dataset(path.string()),
                         doctest::Contains("missing column dim"), ice::DatasetFormatError);
  }

  SUBCASE("short row names the first absent column") {
    std::ofstream out(path);
    out << "epoch,type,anchor_id,ax,ay,az,label,dim,v0,c0\n";
    out << "0,range,0,1,2,0,0,1,5\n";  // c0 missing
    out.close();
    CHECK_THROWS_WITH_AS(ice::load_dataset(path.string()), doctest::Contains("line 2"),
                         ice::DatasetFormatError);
  }

  SUBCASE("non-numeric field") {
    std::ofstream out(path);
    out << "epoch,type,anchor_id,ax,ay,az,label,dim,v0,c0\n";
    out << "0,range,0,1,2,0,0,1,abc,1\n";
    out.close();
    CHECK_THROWS_WITH_AS(ice::load_dataset(path.string()), doctest::Contains("v0"),
                         ice::DatasetFormatError);
  }

  SUBCASE("non-SPD covariance") {
    std::ofstream out(path);
    out << "epoch,type,anchor_id,ax,ay,az,label,dim,v0,c0\n";
    out << "0,range,0,1,2,0,0,1,5,-1\n";
    out.close();
    CHECK_THROWS_WITH_AS(ice::load_dataset(path.string()),
                         doctest::Contains("positive definite"), ice::DatasetFormatError);
  }
}

TEST_CASE("hand-written two-epoch file parses as written") {
  const auto path = temp_file("ice_dataset_hand.csv");
  std::ofstream out(path);
  out << "epoch,type,anchor_id,ax,ay,az,label,dim,v0,v1,c0,c1,c2\n";
  out << "0,truth,-1,0,0,0,0,2,1.5,2.5,0,0,0\n";
  out << "0,prior,0,0,0,0,0,2,1.4,2.6,0.25,0,0.25\n";
  out << "0,range,3,10,0,0,0,1,8.6,0,1,0,0\n";
  out << "1,truth,-1,0,0,0,0,2,2.0,2.5,0,0,0\n";
  out << "1,range,3,10,0,0,1,1,8.1,0,1,0,0\n";
  out.close();

  const auto dataset = ice::load_dataset(path.string());
  REQUIRE(dataset.epochs.size() == 2);
  CHECK(dataset.truth.size() == 2);
  CHECK(dataset.epochs[0].observations.size() == 2);
  CHECK(dataset.epochs[1].observations.size() == 1);
  CHECK(dataset.epochs[1].observations[0].is_outlier);
  CHECK(dataset.epochs[0].observations[0].observation.cov(1, 1) == 0.25);
  CHECK(dataset.epochs[0].observations[1].observation.anchor.x() == 10.0);
}

TEST_CASE("scenario validation") {
  auto config = small_scenario(0.2, 29);
  config.anchors = {Vector2d(0.0, 0.0)};
  CHECK_THROWS_AS(ice::generate_observations(config), std::invalid_argument);

  config = small_scenario(0.2, 29);
  config.contamination.inflation = 1.0;
  CHECK_THROWS_AS(ice::generate_observations(config), std::invalid_argument);
}
