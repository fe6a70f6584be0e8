#pragma once

#include <cstdint>
#include <future>
#include <optional>
#include <utility>
#include <vector>

#include "ice/equivalence.hpp"
#include "ice/incremental.hpp"
#include "ice/mixture.hpp"
#include "ice/variational.hpp"

namespace ice {

struct AdaptationConfig {
  double T_r = 3.0;           // z-test threshold in standard deviations
  std::size_t T_c = 1000;     // buffer cardinality that triggers adaptation
  double alpha_cov = 0.05;    // chi-squared significance for covariance equality
  double alpha_mean = 0.05;   // F significance for mean equality
  std::int64_t prior_support = 1000;  // effective sample size of the a-priori model
  std::int64_t buffer_horizon = 0;    // expire buffered residuals older than this many epochs; 0 keeps all
  // Run fit + merge on a worker thread. The fit consumes an immutable
  // snapshot of the buffer and the merged model is swapped in at the start
  // of a later epoch; given the same firing buffer it is identical to the
  // sequential result.
  bool concurrent = false;
  VariationalConfig fit;
};

// Accumulates non-conforming whitened residuals until the adaptation
// threshold is reached. Cleared atomically after a successful adaptation.
class ResidualBuffer {
 public:
  void append(Eigen::VectorXd residual, std::int64_t epoch);
  void expire_before(std::int64_t epoch);
  void drop_first(std::size_t count);
  void clear() { entries_.clear(); }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // Buffered residuals as rows, oldest first.
  Eigen::MatrixXd snapshot() const;

 private:
  struct Entry {
    Eigen::VectorXd residual;
    std::int64_t epoch;
  };
  std::vector<Entry> entries_;
};

// Conformance score of a residual against one component: |r - mu| / sigma in
// the scalar case, the Mahalanobis distance in general.
double z_score(const Eigen::VectorXd& r, const GaussianComponent& comp);

struct Partition {
  std::vector<std::size_t> inliers;   // indices into the input set
  std::vector<std::size_t> outliers;
};

// Scores every residual against its most likely component; scores strictly
// below T_r are conforming. The two index sets partition the input.
Partition partition_residuals(const std::vector<Eigen::VectorXd>& residuals,
                              const MixtureModel& model, double T_r);

// Moment-pooling update of a prior component (effective count N*w_g) with a
// new component built from m points; the returned weight is
// (N*w_g + m) / (N + M).
GaussianComponent merge_component(const GaussianComponent& g_g, const GaussianComponent& g_n,
                                  double N, double m, double M);

// Pools two moment summaries with the given effective counts; weight is left
// at 1 for the caller to assign.
GaussianComponent pool_components(const GaussianComponent& a, double count_a,
                                  const GaussianComponent& b, double count_b);

// Merges a freshly fitted mixture into the prior model. Each fitted
// component is tested against the prior components in descending weight
// order (covariance equivalence on its whitened assigned points, then mean
// equivalence); the first component passing both absorbs it, otherwise the
// component is appended. Weights are renormalized once over the effective
// count ledger, so they sum to one and support_count becomes N + M.
MixtureModel merge_mixtures(const MixtureModel& prior, const VariationalFit& fitted,
                            const Eigen::MatrixXd& points, double alpha_cov, double alpha_mean);

// Verdict for a single fitted-component / prior-component pair; exposed for
// diagnostics and tests.
EquivalenceVerdict test_component_equivalence(const GaussianComponent& prior_comp,
                                              const GaussianComponent& fitted_comp,
                                              const Eigen::MatrixXd& assigned_points,
                                              double alpha_cov, double alpha_mean);

struct AdaptationReport {
  std::int64_t epoch = 0;
  std::size_t n_inliers = 0;
  std::size_t n_outliers = 0;
  std::size_t buffer_size = 0;
  bool adapted = false;
  std::size_t n_components = 0;
  std::int64_t wall_time_us = 0;
};

struct AdaptationSnapshot {
  std::int64_t epoch = 0;
  MixtureModel model_before;
  MixtureModel model_after;
  Eigen::MatrixXd buffered_residuals;
  Eigen::MatrixXd inlier_sample;
};

// Per-epoch adaptive estimation: partitions incoming observations with the
// z-test, buffers the non-conforming residuals, adapts the uncertainty model
// when the buffer exceeds T_c, and folds the conforming observations into
// the incremental solver.
class IceSession {
 public:
  IceSession(AdaptationConfig config, SessionConfig session_config, MixtureModel prior_model);

  struct EpochInput {
    // Variables introduced this epoch with their initial values.
    std::vector<std::pair<VariableKey, Eigen::VectorXd>> new_variables;
    // Observations subject to the adaptive uncertainty model. Factors carry
    // their a-priori noise_cov; the session whitens, gates and dresses them.
    std::vector<Factor> adaptive;
    // Observations that always enter the solver with their fixed noise.
    std::vector<Factor> trusted;
  };

  struct EpochResult {
    AdaptationReport report;
    std::optional<AdaptationSnapshot> snapshot;
  };

  // Runs one epoch; returns the updated estimate through estimate().
  EpochResult step(std::int64_t epoch, const EpochInput& input);

  const StateVector& estimate() const { return session_.estimate(); }
  const MixtureModel& model() const { return *model_; }
  std::shared_ptr<const MixtureModel> model_ptr() const { return model_; }
  IncrementalSession& solver() { return session_; }
  const ResidualBuffer& buffer() const { return buffer_; }
  int adaptation_count() const { return adaptation_count_; }
  int naive_adaptation_count() const { return naive_adaptation_count_; }

 private:
  struct AdaptationOutcome {
    bool ok = false;
    MixtureModel merged;
    AdaptationSnapshot snapshot;
    std::size_t consumed = 0;
  };

  AdaptationOutcome compute_adaptation(std::int64_t epoch, Eigen::MatrixXd buffered,
                                       std::shared_ptr<const MixtureModel> model,
                                       std::uint64_t attempt,
                                       std::vector<Eigen::VectorXd> inlier_sample) const;

  AdaptationConfig config_;
  IncrementalSession session_;
  std::shared_ptr<const MixtureModel> model_;
  ResidualBuffer buffer_;
  std::vector<Eigen::VectorXd> inlier_sample_;  // bounded reservoir for snapshots
  std::future<AdaptationOutcome> pending_;
  std::uint64_t fit_attempts_ = 0;
  int adaptation_count_ = 0;
  int naive_adaptation_count_ = 0;
  std::size_t naive_accumulator_ = 0;
};

// Dresses a whitened-space mixture into the observation space of a factor
// with a-priori covariance L L^T: components become (w, L mu, L cov L^T).
MixtureModel dress_mixture(const MixtureModel& whitened_model, const Eigen::MatrixXd& noise_cov);

}  // namespace ice
