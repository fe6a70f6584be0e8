#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ice/estimators.hpp"
#include "ice/simulate.hpp"

namespace ice {

// Horizontal root-sum-of-squares error: norm of the first two (or fewer)
// position component differences.
double rsos_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth);

struct ErrorStatistics {
  double mean = 0.0;
  double median = 0.0;
  double std_dev = 0.0;
  double max = 0.0;
};

ErrorStatistics compute_statistics(std::vector<double> values);

// Flat key-value configuration file: `key = value` lines, optional
// [section] headers folded into dotted keys, # comments. A TOML subset.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

struct BenchmarkConfig {
  std::uint64_t seed = 42;
  std::string out_dir = "out";
  std::vector<EstimatorKind> estimators = {EstimatorKind::L2, EstimatorKind::DCS,
                                           EstimatorKind::MM, EstimatorKind::ICE};
  std::string dataset_path;  // empty: generate from scenario
  ScenarioConfig scenario;
  SessionConfig session;
  DcsConfig dcs;
  MaxMixConfig mm;
  AdaptationConfig adaptation;
};

BenchmarkConfig benchmark_config_from(const KeyValueConfig& kv);
BenchmarkConfig load_benchmark_config(const std::string& path);

struct EstimatorResult {
  EstimatorKind kind = EstimatorKind::L2;
  bool completed = false;
  std::string error;
  ErrorStatistics stats;
  std::vector<double> errors;         // per-epoch horizontal RSOS
  std::vector<std::int64_t> timings;  // per-epoch wall us
  EstimatorRun run;
};

struct BenchmarkReport {
  BenchmarkConfig config;
  Dataset dataset;
  std::vector<EstimatorResult> results;

  bool all_completed() const;
};

// Runs every configured estimator on the same dataset and writes
// trajectory_<kind>.csv, reports_<kind>.jsonl, report.json, stats.csv,
// timing.csv and snapshots/*.json under out_dir. report.json contains only
// deterministic fields; timings go to timing.csv.
BenchmarkReport run_benchmark(const BenchmarkConfig& config);

// Serialization pieces, exposed for the CLI verbs and tests.
Dataset benchmark_dataset(const BenchmarkConfig& config);
std::string report_to_json(const BenchmarkReport& report);
std::string stats_to_csv(const BenchmarkReport& report);
void write_benchmark_outputs(const BenchmarkReport& report);
void emit_model_snapshots(const EstimatorRun& run, const std::string& out_dir);

// Recomputes per-estimator statistics from trajectory_<kind>.csv files and
// the dataset truth; used by the `stats` verb and the consistency tests.
std::map<std::string, ErrorStatistics> recompute_statistics_from_files(
    const std::string& out_dir, const std::vector<EstimatorKind>& kinds, const Dataset& dataset);

}  // namespace ice
