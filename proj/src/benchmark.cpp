#include "ice/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ice {

namespace {

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

nlohmann::json mixture_json(const MixtureModel& model) {
  return nlohmann::json::parse(mixture_to_json(model));
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[j] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

double rsos_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
  if (estimate.size() != truth.size())
    throw std::invalid_argument("rsos_error: dimension mismatch");
  const Eigen::Index horizontal = std::min<Eigen::Index>(2, estimate.size());
  return (estimate.head(horizontal) - truth.head(horizontal)).norm();
}

ErrorStatistics compute_statistics(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("compute_statistics: empty input");
  ErrorStatistics stats;
  const double n = static_cast<double>(values.size());
  for (const double v : values) stats.mean += v;
  stats.mean /= n;
  for (const double v : values) stats.std_dev += (v - stats.mean) * (v - stats.mean);
  stats.std_dev = values.size() > 1 ? std::sqrt(stats.std_dev / (n - 1.0)) : 0.0;
  std::sort(values.begin(), values.end());
  stats.max = values.back();
  const std::size_t mid = values.size() / 2;
  stats.median =
      values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  return stats;
}

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str());
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
  KeyValueConfig config;
  std::istringstream stream(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    const auto trim = [](std::string s) {
      const auto begin = s.find_first_not_of(" \t\r");
      if (begin == std::string::npos) return std::string();
      const auto end = s.find_last_not_of(" \t\r");
      return s.substr(begin, end - begin + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (!section.empty()) key = section + "." + key;
    config.values_[key] = value;
  }
  return config;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "' is not a number: " + it->second);
  }
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stoll(it->second);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "' is not an integer: " + it->second);
  }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true") return true;
  if (it->second == "false") return false;
  throw std::invalid_argument("config key '" + key + "' is not a bool: " + it->second);
}

BenchmarkConfig benchmark_config_from(const KeyValueConfig& kv) {
  BenchmarkConfig config;
  config.seed = static_cast<std::uint64_t>(kv.get_int("seed", 42));
  config.out_dir = kv.get_string("out_dir", "out");

  config.estimators.clear();
  std::istringstream estimators(kv.get_string("estimators", "l2,dcs,mm,ice"));
  std::string kind;
  while (std::getline(estimators, kind, ',')) {
    if (!kind.empty()) config.estimators.push_back(estimator_kind_from_string(kind));
  }
  if (config.estimators.empty())
    throw std::invalid_argument("config: no estimators configured");

  config.dataset_path = kv.get_string("dataset.source", "generate");
  if (config.dataset_path == "generate") config.dataset_path.clear();

  auto& scenario = config.scenario;
  scenario.trajectory.n_epochs = static_cast<int>(kv.get_int("dataset.epochs", 500));
  scenario.trajectory.kind = kv.get_string("dataset.trajectory", "constant_velocity") ==
                                     "random_walk"
                                 ? TrajectoryKind::random_walk
                                 : TrajectoryKind::constant_velocity;
  scenario.trajectory.velocity =
      Eigen::Vector2d(kv.get_double("dataset.speed_x", 0.4), kv.get_double("dataset.speed_y", 0.25));
  scenario.trajectory.step_sigma = kv.get_double("dataset.step_sigma", 0.5);
  scenario.observation = kv.get_string("dataset.observation", "pseudorange") == "range"
                             ? ObservationType::range
                             : ObservationType::pseudorange;
  scenario.range_sigma = kv.get_double("dataset.range_sigma", 1.0);
  scenario.between_sigma = kv.get_double("dataset.between_sigma", 0.1);
  scenario.clock_rw_sigma = kv.get_double("dataset.clock_rw_sigma", 0.1);
  scenario.prior_sigma = kv.get_double("dataset.prior_sigma", 0.5);
  scenario.emit_between = kv.get_bool("dataset.emit_between", true);
  const int obs_per_epoch = static_cast<int>(kv.get_int("dataset.obs_per_epoch", 8));
  const double anchor_radius = kv.get_double("dataset.anchor_radius", 80.0);
  const Eigen::Vector2d center =
      scenario.trajectory.start +
      0.5 * scenario.trajectory.n_epochs * scenario.trajectory.velocity;
  scenario.anchors = ring_anchors(obs_per_epoch, anchor_radius,
                                  scenario.trajectory.kind == TrajectoryKind::constant_velocity
                                      ? center
                                      : scenario.trajectory.start);
  scenario.contamination.epsilon = kv.get_double("contamination.epsilon", 0.0);
  scenario.contamination.inflation = kv.get_double("contamination.inflation", 100.0);
  const double offset = kv.get_double("contamination.offset", 0.0);
  if (offset != 0.0) scenario.contamination.offset = Eigen::VectorXd::Constant(1, offset);

  config.session.refactor_period = static_cast<int>(kv.get_int("solver.refactor_period", 100));
  config.session.relinearize_threshold = kv.get_double("solver.relinearize_threshold", 1.0);

  config.dcs.phi = kv.get_double("dcs.phi", 9.0);
  config.dcs.full_irls = kv.get_bool("dcs.full_irls", false);
  config.mm.inlier_weight = kv.get_double("mm.inlier_weight", 0.9);
  config.mm.outlier_weight = kv.get_double("mm.outlier_weight", 0.1);
  config.mm.outlier_inflation = kv.get_double("mm.outlier_inflation", 100.0);

  config.adaptation.T_r = kv.get_double("ice.T_r", 3.0);
  config.adaptation.T_c = static_cast<std::size_t>(kv.get_int("ice.T_c", 1000));
  config.adaptation.alpha_cov = kv.get_double("ice.alpha_cov", 0.05);
  config.adaptation.alpha_mean = kv.get_double("ice.alpha_mean", 0.05);
  config.adaptation.prior_support = kv.get_int("ice.prior_support", 1000);
  config.adaptation.buffer_horizon = kv.get_int("ice.buffer_horizon", 0);
  config.adaptation.concurrent = kv.get_bool("ice.concurrent", false);
  config.adaptation.fit.max_components = static_cast<int>(kv.get_int("ice.max_components", 5));
  config.adaptation.fit.seed = static_cast<std::uint64_t>(kv.get_int("ice.fit_seed", 1));
  return config;
}

BenchmarkConfig load_benchmark_config(const std::string& path) {
  try {
    return benchmark_config_from(KeyValueConfig::parse_file(path));
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config '") + path + "': " + e.what());
  }
}

Dataset benchmark_dataset(const BenchmarkConfig& config) {
  if (!config.dataset_path.empty()) return load_dataset(config.dataset_path);
  ScenarioConfig scenario = config.scenario;
  scenario.seed = config.seed;
  scenario.trajectory.seed = config.seed;
  return generate_observations(scenario);
}

bool BenchmarkReport::all_completed() const {
  for (const auto& result : results)
    if (!result.completed) return false;
  return !results.empty();
}

BenchmarkReport run_benchmark(const BenchmarkConfig& config) {
  BenchmarkReport report;
  report.config = config;
  report.dataset = benchmark_dataset(config);

  for (const EstimatorKind kind : config.estimators) {
    EstimatorResult result;
    result.kind = kind;
    EstimatorConfig estimator;
    estimator.kind = kind;
    estimator.session = config.session;
    estimator.dcs = config.dcs;
    estimator.mm = config.mm;
    estimator.adaptation = config.adaptation;
    try {
      result.run = run_estimator(estimator, report.dataset);
      result.completed = true;
      for (std::size_t t = 0; t < result.run.trajectory.size(); ++t) {
        result.errors.push_back(rsos_error(result.run.trajectory[t], report.dataset.truth[t]));
        result.timings.push_back(result.run.reports[t].wall_time_us);
      }
      result.stats = compute_statistics(result.errors);
    } catch (const std::exception& e) {
      result.completed = false;
      result.error = e.what();
    }
    report.results.push_back(std::move(result));
  }
  return report;
}

std::string report_to_json(const BenchmarkReport& report) {
  nlohmann::json j;
  j["dataset"] = {{"seed", report.config.seed},
                  {"epochs", report.dataset.epochs.size()},
                  {"epsilon", report.dataset.metadata.epsilon},
                  {"k", report.dataset.metadata.inflation},
                  {"observations", report.dataset.count_observations()},
                  {"prng", report.dataset.metadata.prng}};
  j["parameters"] = {
      {"dcs_phi", report.config.dcs.phi},
      {"mm_inlier_weight", report.config.mm.inlier_weight},
      {"mm_outlier_weight", report.config.mm.outlier_weight},
      {"mm_outlier_inflation", report.config.mm.outlier_inflation},
      {"ice_T_r", report.config.adaptation.T_r},
      {"ice_T_c", report.config.adaptation.T_c},
      {"ice_alpha_cov", report.config.adaptation.alpha_cov},
      {"ice_alpha_mean", report.config.adaptation.alpha_mean},
      {"ice_prior_support", report.config.adaptation.prior_support},
      {"refactor_period", report.config.session.refactor_period},
      {"relinearize_threshold", report.config.session.relinearize_threshold}};
  nlohmann::json estimators = nlohmann::json::object();
  for (const auto& result : report.results) {
    nlohmann::json je;
    je["completed"] = result.completed;
    if (result.completed) {
      je["mean"] = result.stats.mean;
      je["median"] = result.stats.median;
      je["std_dev"] = result.stats.std_dev;
      je["max"] = result.stats.max;
      if (result.kind == EstimatorKind::ICE) {
        je["adaptations"] = result.run.adaptation_count;
        je["naive_adaptations"] = result.run.naive_adaptation_count;
        if (result.run.final_model)
          je["final_model"] = mixture_json(*result.run.final_model);
      }
    } else {
      je["error"] = result.error;
    }
    estimators[to_string(result.kind)] = je;
  }
  j["estimators"] = estimators;
  return j.dump(2);
}

std::string stats_to_csv(const BenchmarkReport& report) {
  std::ostringstream out;
  out << "estimator,mean,median,std_dev,max\n";
  for (const auto& result : report.results) {
    if (!result.completed) continue;
    out << to_string(result.kind) << ',' << format_double(result.stats.mean) << ','
        << format_double(result.stats.median) << ',' << format_double(result.stats.std_dev)
        << ',' << format_double(result.stats.max) << "\n";
  }
  return out.str();
}

void write_benchmark_outputs(const BenchmarkReport& report) {
  namespace fs = std::filesystem;
  const fs::path out_dir(report.config.out_dir);
  fs::create_directories(out_dir);

  // Self-contained output: the exact dataset the estimators saw.
  save_dataset(report.dataset, (out_dir / "dataset.csv").string());

  for (const auto& result : report.results) {
    if (!result.completed) continue;
    const bool clocked = report.dataset.has_clock;
    std::ofstream trajectory(out_dir / ("trajectory_" + to_string(result.kind) + ".csv"));
    trajectory << (clocked ? "epoch,x,y,clock_bias\n" : "epoch,x,y\n");
    for (std::size_t t = 0; t < result.run.trajectory.size(); ++t) {
      const auto& estimate = result.run.trajectory[t];
      trajectory << report.dataset.epochs[t].index;
      for (Eigen::Index i = 0; i < estimate.size(); ++i)
        trajectory << ',' << format_double(estimate(i));
      trajectory << "\n";
    }

    std::ofstream reports(out_dir / ("reports_" + to_string(result.kind) + ".jsonl"));
    for (const auto& epoch_report : result.run.reports) {
      nlohmann::json jr = {{"epoch", epoch_report.epoch},
                           {"n_inliers", epoch_report.n_inliers},
                           {"n_outliers", epoch_report.n_outliers},
                           {"buffer_size", epoch_report.buffer_size},
                           {"adapted", epoch_report.adapted},
                           {"n_components", epoch_report.n_components},
                           {"wall_time_us", epoch_report.wall_time_us}};
      reports << jr.dump() << "\n";
    }

    if (result.kind == EstimatorKind::ICE)
      emit_model_snapshots(result.run, (out_dir / "snapshots").string());
  }

  std::ofstream report_json(out_dir / "report.json");
  report_json << report_to_json(report) << "\n";

  std::ofstream stats(out_dir / "stats.csv");
  stats << stats_to_csv(report);

  std::ofstream timing(out_dir / "timing.csv");
  timing << "epoch";
  for (const auto& result : report.results)
    if (result.completed) timing << ',' << to_string(result.kind) << "_us";
  timing << "\n";
  if (!report.results.empty()) {
    const std::size_t epochs = report.dataset.epochs.size();
    for (std::size_t t = 0; t < epochs; ++t) {
      timing << report.dataset.epochs[t].index;
      for (const auto& result : report.results) {
        if (!result.completed) continue;
        timing << ',' << (t < result.timings.size() ? result.timings[t] : 0);
      }
      timing << "\n";
    }
  }
}

void emit_model_snapshots(const EstimatorRun& run, const std::string& out_dir) {
  namespace fs = std::filesystem;
  if (run.snapshots.empty()) return;
  fs::create_directories(out_dir);
  for (const auto& snapshot : run.snapshots) {
    nlohmann::json j;
    j["epoch"] = snapshot.epoch;
    j["model_before"] = mixture_json(snapshot.model_before);
    j["model_after"] = mixture_json(snapshot.model_after);
    j["buffered_residuals"] = matrix_json(snapshot.buffered_residuals);
    j["inlier_sample"] = matrix_json(snapshot.inlier_sample);
    std::ofstream out(fs::path(out_dir) /
                      ("snapshot_" + std::to_string(snapshot.epoch) + ".json"));
    out << j.dump(2) << "\n";
  }
}

std::map<std::string, ErrorStatistics> recompute_statistics_from_files(
    const std::string& out_dir, const std::vector<EstimatorKind>& kinds, const Dataset& dataset) {
  namespace fs = std::filesystem;
  std::map<std::string, ErrorStatistics> out;
  for (const EstimatorKind kind : kinds) {
    const fs::path path = fs::path(out_dir) / ("trajectory_" + to_string(kind) + ".csv");
    std::ifstream in(path);
    if (!in) continue;
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> errors;
    std::size_t t = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream row(line);
      std::string field;
      std::vector<double> fields;
      while (std::getline(row, field, ',')) fields.push_back(std::stod(field));
      if (fields.size() < 3) throw std::invalid_argument("trajectory row too short");
      const Eigen::Vector2d estimate(fields[1], fields[2]);
      const Eigen::Vector2d truth = dataset.truth.at(t).head(2);
      errors.push_back((estimate - truth).norm());
      ++t;
    }
    out[to_string(kind)] = compute_statistics(errors);
  }
  return out;
}

}  // namespace ice
