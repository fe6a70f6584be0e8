#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ice/benchmark.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::string estimators;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

ice::BenchmarkConfig resolve_config(const CommonOptions& options) {
  ice::BenchmarkConfig config = ice::load_benchmark_config(options.config_path);
  if (!options.out_dir.empty()) config.out_dir = options.out_dir;
  if (options.seed_set) config.seed = options.seed;
  if (!options.estimators.empty()) {
    config.estimators.clear();
    std::istringstream stream(options.estimators);
    std::string kind;
    while (std::getline(stream, kind, ','))
      if (!kind.empty()) config.estimators.push_back(ice::estimator_kind_from_string(kind));
  }
  return config;
}

void add_common(CLI::App* cmd, CommonOptions& options) {
  cmd->add_option("--config", options.config_path, "benchmark configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", options.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", options.seed, "seed override")
      ->each([&options](const std::string&) { options.seed_set = true; });
  cmd->add_option("--estimators", options.estimators,
                  "comma-separated estimator list: l2,dcs,mm,ice");
}

void print_stats_table(const ice::BenchmarkReport& report) {
  std::printf("%-10s %10s %10s %10s %10s\n", "estimator", "mean", "median", "std_dev", "max");
  for (const auto& result : report.results) {
    if (!result.completed) {
      std::printf("%-10s failed: %s\n", ice::to_string(result.kind).c_str(),
                  result.error.c_str());
      continue;
    }
    std::printf("%-10s %10.4f %10.4f %10.4f %10.4f\n", ice::to_string(result.kind).c_str(),
                result.stats.mean, result.stats.median, result.stats.std_dev,
                result.stats.max);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust incremental state estimation benchmark runner"};
  app.require_subcommand(1);

  CommonOptions options;

  auto* generate = app.add_subcommand("generate", "generate a synthetic dataset CSV");
  add_common(generate, options);
  std::string dataset_out = "dataset.csv";
  generate->add_option("--dataset-out", dataset_out, "dataset CSV path");

  auto* run = app.add_subcommand("run", "run the configured estimator comparison");
  add_common(run, options);

  auto* stats = app.add_subcommand("stats", "recompute statistics from trajectory CSVs");
  add_common(stats, options);

  auto* snapshots = app.add_subcommand("snapshots", "run ICE and dump model snapshots");
  add_common(snapshots, options);

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) {
      const auto config = resolve_config(options);
      const auto dataset = ice::benchmark_dataset(config);
      ice::save_dataset(dataset, dataset_out);
      std::printf("wrote %zu epochs (%zu observations) to %s\n", dataset.epochs.size(),
                  dataset.count_observations(), dataset_out.c_str());
      return 0;
    }
    if (run->parsed()) {
      const auto config = resolve_config(options);
      const auto report = ice::run_benchmark(config);
      ice::write_benchmark_outputs(report);
      print_stats_table(report);
      return report.all_completed() ? 0 : 1;
    }
    if (stats->parsed()) {
      const auto config = resolve_config(options);
      const auto dataset = ice::benchmark_dataset(config);
      const auto recomputed =
          ice::recompute_statistics_from_files(config.out_dir, config.estimators, dataset);
      std::printf("%-10s %10s %10s %10s %10s\n", "estimator", "mean", "median", "std_dev",
                  "max");
      for (const auto& [name, stat] : recomputed) {
        std::printf("%-10s %10.4f %10.4f %10.4f %10.4f\n", name.c_str(), stat.mean,
                    stat.median, stat.std_dev, stat.max);
      }
      return 0;
    }
    if (snapshots->parsed()) {
      auto config = resolve_config(options);
      config.estimators = {ice::EstimatorKind::ICE};
      const auto report = ice::run_benchmark(config);
      if (!report.all_completed()) {
        std::fprintf(stderr, "ice run failed: %s\n", report.results.front().error.c_str());
        return 1;
      }
      const auto& run_result = report.results.front().run;
      ice::emit_model_snapshots(run_result, config.out_dir + "/snapshots");
      std::printf("%d adaptation(s); snapshots in %s/snapshots\n",
                  run_result.adaptation_count, config.out_dir.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
