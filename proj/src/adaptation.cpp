#include "ice/adaptation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace ice {

void ResidualBuffer::append(Eigen::VectorXd residual, std::int64_t epoch) {
  if (!entries_.empty() && entries_.front().residual.size() != residual.size())
    throw std::invalid_argument("residual buffer: dimension mismatch");
  entries_.push_back({std::move(residual), epoch});
}

void ResidualBuffer::expire_before(std::int64_t epoch) {
  entries_.erase(std::remove_if(entries_.begin(), entries_.end(),
                                [epoch](const Entry& e) { return e.epoch < epoch; }),
                 entries_.end());
}

void ResidualBuffer::drop_first(std::size_t count) {
  entries_.erase(entries_.begin(),
                 entries_.begin() + std::min(count, entries_.size()));
}

Eigen::MatrixXd ResidualBuffer::snapshot() const {
  if (entries_.empty()) return {};
  Eigen::MatrixXd out(entries_.size(), entries_.front().residual.size());
  for (std::size_t i = 0; i < entries_.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = entries_[i].residual.transpose();
  return out;
}

double z_score(const Eigen::VectorXd& r, const GaussianComponent& comp) {
  if (r.size() != comp.dim()) throw std::invalid_argument("z_score: dimension mismatch");
  return mahalanobis_distance(r, comp.mean, comp.cov);
}

Partition partition_residuals(const std::vector<Eigen::VectorXd>& residuals,
                              const MixtureModel& model, double T_r) {
  if (model.components.empty()) throw std::invalid_argument("partition: empty model");
  Partition partition;
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    const std::size_t selected = max_mix_select(model, residuals[i]);
    if (z_score(residuals[i], model.components[selected]) < T_r)
      partition.inliers.push_back(i);
    else
      partition.outliers.push_back(i);
  }
  return partition;
}

GaussianComponent pool_components(const GaussianComponent& a, double count_a,
                                  const GaussianComponent& b, double count_b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("pool_components: dimension mismatch");
  const double total = count_a + count_b;
  if (total <= 0.0) throw std::invalid_argument("pool_components: nonpositive total count");
  GaussianComponent out;
  out.mean = (count_a * a.mean + count_b * b.mean) / total;
  const Eigen::MatrixXd second_moment =
      (count_a * (a.cov + a.mean * a.mean.transpose()) +
       count_b * (b.cov + b.mean * b.mean.transpose())) /
      total;
  const Eigen::MatrixXd cov = second_moment - out.mean * out.mean.transpose();
  out.cov = floor_spd(cov, std::max(1e-12 * cov.trace() / a.dim(), 1e-300));
  out.weight = 1.0;
  return out;
}

GaussianComponent merge_component(const GaussianComponent& g_g, const GaussianComponent& g_n,
                                  double N, double m, double M) {
  const double prior_count = N * g_g.weight;
  if (prior_count + m <= 0.0) throw std::invalid_argument("merge_component: empty merge");
  GaussianComponent merged = pool_components(g_g, prior_count, g_n, m);
  merged.weight = (prior_count + m) / (N + M);
  return merged;
}

EquivalenceVerdict test_component_equivalence(const GaussianComponent& prior_comp,
                                              const GaussianComponent& fitted_comp,
                                              const Eigen::MatrixXd& assigned_points,
                                              double alpha_cov, double alpha_mean) {
  // Whiten the assigned points by the hypothesis covariance; equivalence
  // then reduces to identity covariance and matching means in that space.
  const Eigen::MatrixXd L = cholesky_lower(prior_comp.cov);
  const auto lower = L.triangularView<Eigen::Lower>();
  const Eigen::MatrixXd Y = lower.solve(assigned_points.transpose()).transpose();

  EquivalenceVerdict verdict;
  const auto [w_stat, cov_ok] = covariance_equivalent(Y, alpha_cov);
  verdict.W = w_statistic(Y);
  verdict.cov_equal = cov_ok;
  (void)w_stat;

  const Eigen::VectorXd mu_fit_whitened = lower.solve(fitted_comp.mean.eval());
  const Eigen::VectorXd mu_prior_whitened = lower.solve(prior_comp.mean.eval());
  const Eigen::MatrixXd cov_y = sample_covariance_biased(Y);
  const auto [t_squared, mean_ok] =
      mean_equivalent(mu_fit_whitened, mu_prior_whitened, cov_y, Y.rows(), alpha_mean);
  verdict.T_squared = t_squared;
  verdict.mean_equal = mean_ok;
  return verdict;
}

MixtureModel merge_mixtures(const MixtureModel& prior, const VariationalFit& fitted,
                            const Eigen::MatrixXd& points, double alpha_cov, double alpha_mean) {
  const Eigen::Index d = prior.dim();
  if (fitted.model.dim() != d) throw std::invalid_argument("merge_mixtures: dimension mismatch");
  if (points.rows() != static_cast<Eigen::Index>(fitted.assignments.size()))
    throw std::invalid_argument("merge_mixtures: assignment count mismatch");
  const std::int64_t total_assigned =
      std::accumulate(fitted.component_counts.begin(), fitted.component_counts.end(),
                      std::int64_t{0});
  if (total_assigned != fitted.model.support_count)
    throw std::invalid_argument("merge_mixtures: component counts do not sum to support count");

  const double N = static_cast<double>(prior.support_count);
  const double M = static_cast<double>(fitted.model.support_count);

  // Candidate order: prior components by descending weight (stable on ties).
  std::vector<std::size_t> candidate_order(prior.components.size());
  std::iota(candidate_order.begin(), candidate_order.end(), 0);
  std::stable_sort(candidate_order.begin(), candidate_order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return prior.components[a].weight > prior.components[b].weight;
                   });

  // Match decisions are made against the unmodified prior components; the
  // count ledger is applied afterwards so the final weights renormalize once.
  std::vector<int> matched_prior(fitted.model.components.size(), -1);
  for (std::size_t k = 0; k < fitted.model.components.size(); ++k) {
    const int m_k = fitted.component_counts[k];
    if (m_k <= d) continue;  // too few points to test; append as new
    Eigen::MatrixXd assigned(m_k, d);
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < fitted.assignments.size(); ++i) {
      if (fitted.assignments[i] == static_cast<int>(k))
        assigned.row(row++) = points.row(static_cast<Eigen::Index>(i));
    }
    for (const std::size_t g : candidate_order) {
      const auto verdict = test_component_equivalence(
          prior.components[g], fitted.model.components[k], assigned, alpha_cov, alpha_mean);
      if (verdict.cov_equal && verdict.mean_equal) {
        matched_prior[k] = static_cast<int>(g);
        break;
      }
    }
  }

  // Effective count ledger: prior components start at N * w_g.
  MixtureModel merged;
  merged.support_count = prior.support_count + fitted.model.support_count;
  std::vector<double> counts;
  for (const auto& comp : prior.components) {
    merged.components.push_back(comp);
    counts.push_back(N * comp.weight);
  }
  for (std::size_t k = 0; k < fitted.model.components.size(); ++k) {
    const double m_k = static_cast<double>(fitted.component_counts[k]);
    if (matched_prior[k] >= 0) {
      const std::size_t g = static_cast<std::size_t>(matched_prior[k]);
      merged.components[g] =
          pool_components(merged.components[g], counts[g], fitted.model.components[k], m_k);
      counts[g] += m_k;
    } else {
      merged.components.push_back(fitted.model.components[k]);
      counts.push_back(m_k);
    }
  }
  const double total = N + M;
  for (std::size_t i = 0; i < merged.components.size(); ++i)
    merged.components[i].weight = counts[i] / total;
  return merged;
}

MixtureModel dress_mixture(const MixtureModel& whitened_model, const Eigen::MatrixXd& noise_cov) {
  const Eigen::MatrixXd L = cholesky_lower(noise_cov);
  MixtureModel dressed;
  dressed.support_count = whitened_model.support_count;
  for (const auto& comp : whitened_model.components) {
    GaussianComponent out;
    out.weight = comp.weight;
    out.mean = L * comp.mean;
    out.cov = L * comp.cov * L.transpose();
    dressed.components.push_back(std::move(out));
  }
  return dressed;
}

IceSession::IceSession(AdaptationConfig config, SessionConfig session_config,
                       MixtureModel prior_model)
    : config_(config), session_(session_config) {
  prior_model.validate();
  if (config_.T_r <= 0.0) throw std::invalid_argument("adaptation: T_r must be positive");
  if (config_.alpha_cov <= 0.0 || config_.alpha_cov >= 1.0 || config_.alpha_mean <= 0.0 ||
      config_.alpha_mean >= 1.0)
    throw std::invalid_argument("adaptation: significance levels must lie in (0, 1)");
  if (config_.prior_support < 0)
    throw std::invalid_argument("adaptation: prior support must be nonnegative");
  const std::size_t min_fit =
      config_.fit.min_points > 0
          ? config_.fit.min_points
          : static_cast<std::size_t>(2 * prior_model.dim() * config_.fit.max_components);
  if (config_.T_c < min_fit)
    throw std::invalid_argument("adaptation: T_c below the minimum fit size");
  model_ = std::make_shared<const MixtureModel>(std::move(prior_model));
}

IceSession::AdaptationOutcome IceSession::compute_adaptation(
    std::int64_t epoch, Eigen::MatrixXd buffered, std::shared_ptr<const MixtureModel> model,
    std::uint64_t attempt, std::vector<Eigen::VectorXd> inlier_sample) const {
  AdaptationOutcome outcome;
  outcome.consumed = static_cast<std::size_t>(buffered.rows());
  VariationalConfig fit_config = config_.fit;
  fit_config.seed = config_.fit.seed ^ (0x9e3779b97f4a7c15ULL * attempt);
  try {
    const VariationalFit fit = fit_mixture_variational(buffered, fit_config);
    outcome.merged = merge_mixtures(*model, fit, buffered, config_.alpha_cov, config_.alpha_mean);
    outcome.snapshot.epoch = epoch;
    outcome.snapshot.model_before = *model;
    outcome.snapshot.model_after = outcome.merged;
    outcome.snapshot.buffered_residuals = std::move(buffered);
    Eigen::MatrixXd inliers(inlier_sample.size(), model->dim());
    for (std::size_t i = 0; i < inlier_sample.size(); ++i)
      inliers.row(static_cast<Eigen::Index>(i)) = inlier_sample[i].transpose();
    outcome.snapshot.inlier_sample = std::move(inliers);
    outcome.ok = true;
  } catch (const FitError&) {
    outcome.ok = false;  // model and buffer stay untouched; retried later
  }
  return outcome;
}

IceSession::EpochResult IceSession::step(std::int64_t epoch, const EpochInput& input) {
  const auto start = std::chrono::steady_clock::now();
  EpochResult result;
  result.report.epoch = epoch;

  // A finished background adaptation is swapped in atomically at epoch start.
  if (pending_.valid() && pending_.wait_for(std::chrono::seconds(0)) == std::future_status::ready) {
    AdaptationOutcome outcome = pending_.get();
    if (outcome.ok) {
      model_ = std::make_shared<const MixtureModel>(std::move(outcome.merged));
      buffer_.drop_first(outcome.consumed);
      ++adaptation_count_;
      result.report.adapted = true;
      result.snapshot = std::move(outcome.snapshot);
    }
  }

  for (const auto& [key, value] : input.new_variables) session_.add_variable(key, value);

  // Whitened residuals of the adaptive observations at the current estimate
  // (new variables evaluate at their initial values).
  std::vector<Eigen::VectorXd> whitened;
  whitened.reserve(input.adaptive.size());
  for (const auto& factor : input.adaptive) {
    const Eigen::VectorXd residual = compute_residual(factor, session_.estimate());
    const Eigen::MatrixXd L = cholesky_lower(factor.noise_cov);
    whitened.push_back(L.triangularView<Eigen::Lower>().solve(residual));
  }

  const Partition partition = partition_residuals(whitened, *model_, config_.T_r);
  result.report.n_inliers = partition.inliers.size();
  result.report.n_outliers = partition.outliers.size();

  for (const std::size_t i : partition.outliers) buffer_.append(whitened[i], epoch);
  if (config_.buffer_horizon > 0) buffer_.expire_before(epoch - config_.buffer_horizon);

  // Counter of what adaptation-without-gating would do: every residual is
  // treated as informative and the model refits whenever the running count
  // clears the same threshold.
  naive_accumulator_ += whitened.size();
  if (naive_accumulator_ > config_.T_c) {
    ++naive_adaptation_count_;
    naive_accumulator_ = 0;
  }

  if (buffer_.size() > config_.T_c) {
    if (!config_.concurrent) {
      AdaptationOutcome outcome =
          compute_adaptation(epoch, buffer_.snapshot(), model_, ++fit_attempts_, inlier_sample_);
      if (outcome.ok) {
        model_ = std::make_shared<const MixtureModel>(std::move(outcome.merged));
        buffer_.drop_first(outcome.consumed);
        ++adaptation_count_;
        result.report.adapted = true;
        result.snapshot = std::move(outcome.snapshot);
      }
    } else if (!pending_.valid()) {
      // The worker owns immutable copies; the estimator keeps reading the
      // current model pointer until the swap.
      pending_ = std::async(
          std::launch::async,
          [this, epoch, buffered = buffer_.snapshot(), model = model_,
           attempt = ++fit_attempts_, sample = inlier_sample_]() mutable {
            return compute_adaptation(epoch, std::move(buffered), std::move(model), attempt,
                                      std::move(sample));
          });
    }
  }

  // Conforming observations enter the solver dressed with the current model;
  // rejected observations never reach the square-root system.
  std::vector<Factor> accepted = input.trusted;
  for (const std::size_t i : partition.inliers) {
    Factor factor = input.adaptive[i];
    factor.noise_mixture = std::make_shared<const MixtureModel>(
        dress_mixture(*model_, factor.noise_cov));
    accepted.push_back(std::move(factor));

    if (inlier_sample_.size() < 512)
      inlier_sample_.push_back(whitened[i]);
    else
      inlier_sample_[i % 512] = whitened[i];
  }
  session_.update(std::move(accepted));

  result.report.buffer_size = buffer_.size();
  result.report.n_components = model_->size();
  result.report.wall_time_us = std::chrono::duration_cast<std::chrono::microseconds>(
                                   std::chrono::steady_clock::now() - start)
                                   .count();
  return result;
}

}  // namespace ice
