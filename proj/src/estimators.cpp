#include "ice/estimators.hpp"

#include <chrono>
#include <stdexcept>

namespace ice {

namespace {

struct EpochFactors {
  std::vector<std::pair<VariableKey, Eigen::VectorXd>> new_variables;
  std::vector<Factor> trusted;   // priors, between/odometry, clock process
  std::vector<Factor> adaptive;  // range / pseudorange observations
};

VariableKey position_key(std::int64_t epoch) { return {"x", epoch}; }
VariableKey clock_key(std::int64_t epoch) { return {"clk", epoch}; }

// Converts one dataset epoch into factors plus initial values for the new
// variables, predicting them from the previous estimate and the odometry.
EpochFactors build_epoch(const Dataset& dataset, std::size_t t, const StateVector* previous) {
  const auto observations = dataset.epoch_view(t);
  const std::int64_t epoch = dataset.epochs[t].index;
  const Eigen::Index pos_dim = dataset.position_dim;

  Eigen::VectorXd position_init = Eigen::VectorXd::Zero(pos_dim);
  Eigen::VectorXd clock_init = Eigen::VectorXd::Zero(1);
  if (previous != nullptr && t > 0) {
    const std::int64_t prev_epoch = dataset.epochs[t - 1].index;
    position_init = previous->at(position_key(prev_epoch));
    if (dataset.has_clock) clock_init = previous->at(clock_key(prev_epoch));
    for (const auto& obs : observations) {
      if (obs.type == ObservationType::between && obs.anchor_id == 0)
        position_init += obs.value;
    }
  } else {
    for (const auto& obs : observations) {
      if (obs.type == ObservationType::prior && obs.anchor_id == 0) position_init = obs.value;
      if (obs.type == ObservationType::prior && obs.anchor_id == 1) clock_init = obs.value;
    }
  }

  EpochFactors out;
  out.new_variables.emplace_back(position_key(epoch), position_init);
  if (dataset.has_clock) out.new_variables.emplace_back(clock_key(epoch), clock_init);

  for (const auto& obs : observations) {
    Factor factor;
    factor.observed = obs.value;
    factor.noise_cov = obs.cov;
    switch (obs.type) {
      case ObservationType::prior:
        factor.variables = {obs.anchor_id == 1 ? clock_key(epoch) : position_key(epoch)};
        factor.model = std::make_shared<PriorModel>(obs.value.size());
        out.trusted.push_back(std::move(factor));
        break;
      case ObservationType::between: {
        if (t == 0)
          throw std::invalid_argument("between observation at the first epoch");
        const std::int64_t prev_epoch = dataset.epochs[t - 1].index;
        if (obs.anchor_id == 1)
          factor.variables = {clock_key(prev_epoch), clock_key(epoch)};
        else
          factor.variables = {position_key(prev_epoch), position_key(epoch)};
        factor.model = std::make_shared<BetweenModel>(obs.value.size());
        out.trusted.push_back(std::move(factor));
        break;
      }
      case ObservationType::range:
        factor.variables = {position_key(epoch)};
        factor.model = std::make_shared<RangeModel>(obs.anchor.head(pos_dim));
        out.adaptive.push_back(std::move(factor));
        break;
      case ObservationType::pseudorange:
        factor.variables = {position_key(epoch), clock_key(epoch)};
        factor.model = std::make_shared<PseudorangeModel>(obs.anchor.head(pos_dim));
        out.adaptive.push_back(std::move(factor));
        break;
    }
  }
  return out;
}

// Static max-mixtures model in the observation space of one factor.
MixtureModel static_max_mix_model(const MaxMixConfig& config, const Eigen::MatrixXd& apriori_cov) {
  MixtureModel model;
  const double total = config.inlier_weight + config.outlier_weight;
  if (total <= 0.0) throw std::invalid_argument("max-mix: weights must not both be zero");
  const Eigen::Index d = apriori_cov.rows();
  if (config.inlier_weight > 0.0) {
    model.components.push_back(
        {config.inlier_weight / total, Eigen::VectorXd::Zero(d), apriori_cov});
  }
  if (config.outlier_weight > 0.0) {
    model.components.push_back({config.outlier_weight / total, Eigen::VectorXd::Zero(d),
                                config.outlier_inflation * apriori_cov});
  }
  model.support_count = 0;
  return model;
}

Eigen::VectorXd record_estimate(const Dataset& dataset, std::int64_t epoch,
                                const StateVector& state) {
  const Eigen::Index pos_dim = dataset.position_dim;
  Eigen::VectorXd out(pos_dim + (dataset.has_clock ? 1 : 0));
  out.head(pos_dim) = state.at(position_key(epoch));
  if (dataset.has_clock) out(pos_dim) = state.at(clock_key(epoch))(0);
  return out;
}

}  // namespace

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::L2: return "l2";
    case EstimatorKind::DCS: return "dcs";
    case EstimatorKind::MM: return "mm";
    case EstimatorKind::ICE: return "ice";
  }
  return "unknown";
}

EstimatorKind estimator_kind_from_string(const std::string& text) {
  if (text == "l2") return EstimatorKind::L2;
  if (text == "dcs") return EstimatorKind::DCS;
  if (text == "mm") return EstimatorKind::MM;
  if (text == "ice") return EstimatorKind::ICE;
  throw std::invalid_argument("unknown estimator '" + text + "'");
}

double dcs_weight(double squared_error, double phi) {
  if (squared_error < 0.0) throw std::invalid_argument("dcs_weight: negative error");
  if (phi <= 0.0) throw std::invalid_argument("dcs_weight: phi must be positive");
  const double s = std::min(1.0, 2.0 * phi / (phi + squared_error));
  return s * s;
}

EstimatorRun run_estimator(const EstimatorConfig& config, const Dataset& dataset) {
  if (dataset.epochs.empty()) throw std::invalid_argument("run_estimator: empty dataset");
  EstimatorRun run;
  run.trajectory.reserve(dataset.epochs.size());
  run.reports.reserve(dataset.epochs.size());

  if (config.kind == EstimatorKind::ICE) {
    Eigen::Index obs_dim = 1;
    for (const auto& epoch : dataset.epochs) {
      for (const auto& labeled : epoch.observations) {
        if (labeled.observation.type == ObservationType::range ||
            labeled.observation.type == ObservationType::pseudorange) {
          obs_dim = labeled.observation.value.size();
          break;
        }
      }
    }
    IceSession session(config.adaptation, config.session,
                       unit_mixture(obs_dim, config.adaptation.prior_support));
    for (std::size_t t = 0; t < dataset.epochs.size(); ++t) {
      const StateVector* previous = t > 0 ? &session.estimate() : nullptr;
      const EpochFactors epoch_factors = build_epoch(dataset, t, previous);
      IceSession::EpochInput input;
      input.new_variables = epoch_factors.new_variables;
      input.trusted = epoch_factors.trusted;
      input.adaptive = epoch_factors.adaptive;

      auto result = session.step(dataset.epochs[t].index, input);
      run.reports.push_back(result.report);
      if (result.snapshot) run.snapshots.push_back(std::move(*result.snapshot));
      run.trajectory.push_back(
          record_estimate(dataset, dataset.epochs[t].index, session.estimate()));
    }
    run.adaptation_count = session.adaptation_count();
    run.naive_adaptation_count = session.naive_adaptation_count();
    run.final_model = session.model();
    return run;
  }

  IncrementalSession session(config.session);
  std::vector<bool> adaptive_flags;  // per session factor, for inner IRLS
  for (std::size_t t = 0; t < dataset.epochs.size(); ++t) {
    const StateVector* previous = t > 0 ? &session.estimate() : nullptr;
    EpochFactors epoch_factors = build_epoch(dataset, t, previous);

    // Timed like IceSession::step: variable registration through the solve.
    const auto start = std::chrono::steady_clock::now();
    for (auto& [key, value] : epoch_factors.new_variables) session.add_variable(key, value);

    std::vector<Factor> factors = std::move(epoch_factors.trusted);
    std::vector<double> weights(factors.size(), 1.0);
    adaptive_flags.insert(adaptive_flags.end(), factors.size(), false);
    for (auto& factor : epoch_factors.adaptive) {
      double weight = 1.0;
      switch (config.kind) {
        case EstimatorKind::L2:
          break;
        case EstimatorKind::DCS: {
          // One reweighting per epoch at the pre-update estimate.
          const Eigen::VectorXd residual = compute_residual(factor, session.estimate());
          const Eigen::MatrixXd L = cholesky_lower(factor.noise_cov);
          const double squared_error =
              L.triangularView<Eigen::Lower>().solve(residual).squaredNorm();
          weight = dcs_weight(squared_error, config.dcs.phi);
          break;
        }
        case EstimatorKind::MM:
          factor.noise_mixture = std::make_shared<const MixtureModel>(
              static_max_mix_model(config.mm, factor.noise_cov));
          break;
        case EstimatorKind::ICE:
          break;
      }
      factors.push_back(std::move(factor));
      weights.push_back(weight);
      adaptive_flags.push_back(true);
    }

    session.update(std::move(factors), std::move(weights));

    if (config.kind == EstimatorKind::DCS && config.dcs.full_irls) {
      for (int iteration = 0; iteration < config.dcs.irls_iterations; ++iteration) {
        std::vector<double> irls_weights = session.factor_weights();
        double max_change = 0.0;
        for (std::size_t n = 0; n < session.graph().factors.size(); ++n) {
          if (!adaptive_flags[n]) continue;
          const auto& factor = session.graph().factors[n];
          const Eigen::VectorXd residual = compute_residual(factor, session.estimate());
          const Eigen::MatrixXd L = cholesky_lower(factor.noise_cov);
          const double squared_error =
              L.triangularView<Eigen::Lower>().solve(residual).squaredNorm();
          const double updated = dcs_weight(squared_error, config.dcs.phi);
          max_change = std::max(max_change, std::abs(updated - irls_weights[n]));
          irls_weights[n] = updated;
        }
        if (max_change < config.dcs.irls_tolerance) break;
        session.refactor_with_weights(std::move(irls_weights));
      }
    }

    AdaptationReport report;
    report.epoch = dataset.epochs[t].index;
    report.n_inliers = epoch_factors.adaptive.size();
    report.n_outliers = 0;
    report.buffer_size = 0;
    report.adapted = false;
    report.n_components = config.kind == EstimatorKind::MM ? 2 : 1;
    report.wall_time_us = std::chrono::duration_cast<std::chrono::microseconds>(
                              std::chrono::steady_clock::now() - start)
                              .count();
    run.reports.push_back(report);
    run.trajectory.push_back(
        record_estimate(dataset, dataset.epochs[t].index, session.estimate()));
  }
  return run;
}

}  // namespace ice
