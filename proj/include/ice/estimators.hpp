#pragma once

#include <optional>
#include <string>

#include "ice/adaptation.hpp"
#include "ice/dataset.hpp"

namespace ice {

enum class EstimatorKind { L2, DCS, MM, ICE };

std::string to_string(EstimatorKind kind);
EstimatorKind estimator_kind_from_string(const std::string& text);

struct DcsConfig {
  double phi = 9.0;  // scaling kicks in once the squared whitened error exceeds phi
  // Iterate reweighting and refactorization to convergence within each epoch
  // instead of the single pass that mirrors incremental operation.
  bool full_irls = false;
  int irls_iterations = 5;
  double irls_tolerance = 1e-3;
};

// Static two-component measurement error model, expressed relative to each
// observation's a-priori covariance.
struct MaxMixConfig {
  double inlier_weight = 0.9;
  double outlier_weight = 0.1;
  double outlier_inflation = 100.0;
};

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::L2;
  SessionConfig session;
  DcsConfig dcs;
  MaxMixConfig mm;
  AdaptationConfig adaptation;
};

struct EstimatorRun {
  // Per-epoch estimate at the time the epoch was processed: position
  // components then clock bias when present.
  std::vector<Eigen::VectorXd> trajectory;
  std::vector<AdaptationReport> reports;
  std::vector<AdaptationSnapshot> snapshots;
  int adaptation_count = 0;
  int naive_adaptation_count = 0;
  std::optional<MixtureModel> final_model;
};

// Closed-form robust weight: s = min(1, 2*phi / (phi + e)) applied as s^2,
// where e is the squared whitened error norm. Conforming errors keep weight
// one; gross errors decay toward zero.
double dcs_weight(double squared_error, double phi);

// Runs one estimation strategy over the full dataset. All four strategies
// share the same incremental solver and produce a trajectory over identical
// epochs.
EstimatorRun run_estimator(const EstimatorConfig& config, const Dataset& dataset);

}  // namespace ice
