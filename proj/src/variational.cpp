#include "ice/variational.hpp"

#include <cmath>
#include <limits>

#include "ice/rng.hpp"
#include "ice/special_functions.hpp"

namespace ice {

namespace {

// State of one variational Normal-inverse-Wishart posterior. psi is the
// inverse of the Wishart scale W, kept in that form because every quantity
// needed downstream is cheaper against psi.
struct ComponentPosterior {
  double alpha = 0.0;
  double beta = 0.0;
  double nu = 0.0;
  Eigen::VectorXd m;
  Eigen::MatrixXd psi;

  Eigen::LLT<Eigen::MatrixXd> psi_llt;
  double log_det_psi = 0.0;

  void refresh_decomposition() {
    psi_llt.compute(psi);
    log_det_psi = 2.0 * Eigen::MatrixXd(psi_llt.matrixL()).diagonal().array().log().sum();
  }

  double expected_log_det_precision(int d) const {
    double sum = d * std::log(2.0) - log_det_psi;
    for (int j = 1; j <= d; ++j) sum += digamma(0.5 * (nu + 1.0 - j));
    return sum;
  }
};

// ln B(W, nu) of the Wishart normalization, expressed through psi = W^{-1}.
double log_wishart_b(double log_det_psi, double nu, int d) {
  return 0.5 * nu * log_det_psi - 0.5 * nu * d * std::log(2.0) -
         log_multivariate_gamma(0.5 * nu, d);
}

std::vector<Eigen::Index> kmeanspp_seeds(const Eigen::MatrixXd& points, int k, Rng& rng) {
  const Eigen::Index n = points.rows();
  std::vector<Eigen::Index> seeds;
  seeds.push_back(static_cast<Eigen::Index>(rng.next_index(n)));
  Eigen::VectorXd dist2 =
      (points.rowwise() - points.row(seeds[0])).rowwise().squaredNorm();
  while (static_cast<int>(seeds.size()) < k) {
    const double total = dist2.sum();
    Eigen::Index pick = 0;
    if (total <= 0.0) {
      pick = static_cast<Eigen::Index>(rng.next_index(n));
    } else {
      double target = rng.next_double() * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= dist2(i);
        if (target <= 0.0) {
          pick = i;
          break;
        }
      }
    }
    seeds.push_back(pick);
    dist2 = dist2.cwiseMin(
        (points.rowwise() - points.row(pick)).rowwise().squaredNorm());
  }
  return seeds;
}

struct TruncatedFit {
  int k = 0;
  double final_elbo = -std::numeric_limits<double>::infinity();
  double selection_score = -std::numeric_limits<double>::infinity();
  std::vector<double> elbo_history;
  std::vector<ComponentPosterior> posts;
  Eigen::VectorXd counts;
  Eigen::MatrixXd resp;
  int iterations = 0;
};

struct Priors {
  double alpha0 = 0.0;
  double beta0 = 1.0;
  double nu0 = 0.0;
  Eigen::VectorXd m0;
  Eigen::MatrixXd psi0;
  double log_det_psi0 = 0.0;
};

// Coordinate-ascent VB for one truncation level k.
TruncatedFit fit_truncation(const Eigen::MatrixXd& points, const Priors& priors, int k,
                            const VariationalConfig& config, std::uint64_t seed) {
  const Eigen::Index n = points.rows();
  const int d = static_cast<int>(points.cols());

  Rng rng(seed);
  const auto seeds = kmeanspp_seeds(points, k, rng);

  TruncatedFit fit;
  fit.k = k;
  fit.resp = Eigen::MatrixXd::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      const double dist = (points.row(i) - points.row(seeds[c])).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best = c;
      }
    }
    fit.resp(i, best) = 1.0;
  }

  fit.posts.assign(k, {});
  fit.counts.resize(k);
  std::vector<Eigen::VectorXd> means(k);
  std::vector<Eigen::MatrixXd> scatters(k);

  const auto m_step = [&]() {
    fit.counts = fit.resp.colwise().sum();
    for (int c = 0; c < k; ++c) {
      auto& post = fit.posts[c];
      const double nk = fit.counts(c);
      if (nk > 1e-12) {
        means[c] = (fit.resp.col(c).transpose() * points).transpose() / nk;
        const Eigen::MatrixXd diff = points.rowwise() - means[c].transpose();
        scatters[c] = (diff.transpose() * fit.resp.col(c).asDiagonal() * diff) / nk;
      } else {
        means[c] = priors.m0;
        scatters[c] = Eigen::MatrixXd::Zero(d, d);
      }
      post.alpha = priors.alpha0 + nk;
      post.beta = priors.beta0 + nk;
      post.nu = priors.nu0 + nk;
      post.m = (priors.beta0 * priors.m0 + nk * means[c]) / post.beta;
      const Eigen::VectorXd dev = means[c] - priors.m0;
      post.psi = priors.psi0 + nk * scatters[c] +
                 (priors.beta0 * nk / (priors.beta0 + nk)) * dev * dev.transpose();
      post.refresh_decomposition();
    }
  };

  const auto e_step = [&]() {
    const double alpha_sum = priors.alpha0 * k + fit.counts.sum();
    Eigen::MatrixXd log_resp(n, k);
    for (int c = 0; c < k; ++c) {
      const auto& post = fit.posts[c];
      const double expected_log_pi = digamma(post.alpha) - digamma(alpha_sum);
      const double expected_log_det = post.expected_log_det_precision(d);
      const Eigen::MatrixXd diff = points.rowwise() - post.m.transpose();
      const Eigen::MatrixXd solved = post.psi_llt.matrixL().solve(diff.transpose());
      const Eigen::VectorXd quad =
          post.nu * solved.colwise().squaredNorm().transpose().array() + d / post.beta;
      log_resp.col(c) = expected_log_pi + 0.5 * expected_log_det -
                        0.5 * d * std::log(2.0 * M_PI) - 0.5 * quad.array();
    }
    const Eigen::VectorXd row_max = log_resp.rowwise().maxCoeff();
    log_resp.colwise() -= row_max;
    fit.resp = log_resp.array().exp();
    const Eigen::VectorXd norms = fit.resp.rowwise().sum();
    fit.resp.array().colwise() /= norms.array();
  };

  const auto elbo = [&]() {
    const double alpha_sum = priors.alpha0 * k + fit.counts.sum();
    double value = 0.0;

    value += std::lgamma(priors.alpha0 * k) - k * std::lgamma(priors.alpha0);
    double ln_c_post = std::lgamma(alpha_sum);
    for (int c = 0; c < k; ++c) ln_c_post -= std::lgamma(fit.posts[c].alpha);
    value -= ln_c_post;

    for (int c = 0; c < k; ++c) {
      const auto& post = fit.posts[c];
      const double nk = fit.counts(c);
      const double expected_log_pi = digamma(post.alpha) - digamma(alpha_sum);
      const double expected_log_det = post.expected_log_det_precision(d);
      const double trace_w0_wk = post.psi_llt.solve(priors.psi0).trace();

      const Eigen::MatrixXd solved_scatter = post.psi_llt.solve(scatters[c]);
      const Eigen::VectorXd white_dev = post.psi_llt.matrixL().solve(
          (means[c] - post.m).eval());
      const Eigen::VectorXd white_prior_dev = post.psi_llt.matrixL().solve(
          (post.m - priors.m0).eval());

      // E[ln p(X | Z, mu, Lambda)]
      value += 0.5 * nk *
               (expected_log_det - d / post.beta - post.nu * solved_scatter.trace() -
                post.nu * white_dev.squaredNorm() - d * std::log(2.0 * M_PI));
      // pi exponents from E[ln p(Z|pi)] + E[ln p(pi)] - E[ln q(pi)].
      value += (nk + priors.alpha0 - post.alpha) * expected_log_pi;
      // E[ln p(mu, Lambda)]
      value += 0.5 * (d * std::log(priors.beta0 / (2.0 * M_PI)) + expected_log_det -
                      d * priors.beta0 / post.beta -
                      priors.beta0 * post.nu * white_prior_dev.squaredNorm());
      value += log_wishart_b(priors.log_det_psi0, priors.nu0, d) +
               0.5 * (priors.nu0 - d - 1.0) * expected_log_det - 0.5 * post.nu * trace_w0_wk;
      // -E[ln q(mu, Lambda)]
      const double entropy_wishart = -log_wishart_b(post.log_det_psi, post.nu, d) -
                                     0.5 * (post.nu - d - 1.0) * expected_log_det +
                                     0.5 * post.nu * d;
      value -= 0.5 * expected_log_det + 0.5 * d * std::log(post.beta / (2.0 * M_PI)) -
               0.5 * d - entropy_wishart;
    }

    for (Eigen::Index i = 0; i < n; ++i)
      for (int c = 0; c < k; ++c)
        if (fit.resp(i, c) > 1e-300) value -= fit.resp(i, c) * std::log(fit.resp(i, c));

    return value;
  };

  m_step();
  double previous = -std::numeric_limits<double>::infinity();
  for (int iteration = 0; iteration < config.max_iterations; ++iteration) {
    e_step();
    m_step();
    const double bound = elbo();
    if (!std::isfinite(bound)) throw FitError("variational fit: non-finite bound");
    fit.elbo_history.push_back(bound);
    fit.iterations = iteration + 1;
    if (iteration > 0 &&
        std::abs(bound - previous) < config.elbo_tolerance * (1.0 + std::abs(bound)))
      break;
    previous = bound;
  }
  fit.final_elbo = fit.elbo_history.back();
  // Label-symmetry correction makes bounds comparable across truncations.
  fit.selection_score = fit.final_elbo + std::lgamma(k + 1.0);
  return fit;
}

}  // namespace

VariationalFit fit_mixture_variational(const Eigen::MatrixXd& residuals,
                                       const VariationalConfig& config) {
  const Eigen::Index n = residuals.rows();
  const int d = static_cast<int>(residuals.cols());
  const int k_max = config.max_components;
  if (d < 1 || k_max < 1) throw FitError("variational fit: bad configuration");
  const std::size_t min_points =
      config.min_points > 0 ? config.min_points : static_cast<std::size_t>(2 * d * k_max);
  if (static_cast<std::size_t>(n) < min_points)
    throw FitError("variational fit: " + std::to_string(n) + " points, need at least " +
                   std::to_string(min_points));
  if (!residuals.allFinite()) throw FitError("variational fit: non-finite input");

  // Data-driven priors: Dirichlet 1/K_max, mean prior at the batch mean,
  // inverse Wishart scale at the (floored) batch covariance.
  Priors priors;
  priors.alpha0 = 1.0 / k_max;
  priors.beta0 = 1.0;
  priors.nu0 = d + 2.0;
  priors.m0 = residuals.colwise().mean();
  const Eigen::MatrixXd centered = residuals.rowwise() - priors.m0.transpose();
  Eigen::MatrixXd batch_cov = (centered.transpose() * centered) / static_cast<double>(n);
  const double floor_eigenvalue = std::max(1e-8 * batch_cov.trace() / d, 1e-12);
  priors.psi0 = floor_spd(batch_cov, floor_eigenvalue);
  priors.log_det_psi0 =
      2.0 * Eigen::MatrixXd(Eigen::LLT<Eigen::MatrixXd>(priors.psi0).matrixL())
                .diagonal()
                .array()
                .log()
                .sum();

  // The truncation level is selected by the evidence bound: every K up to
  // K_max is fitted from its own seeding and the best corrected bound wins.
  TruncatedFit best;
  for (int k = 1; k <= k_max; ++k) {
    const std::uint64_t seed = config.seed ^ (0x5bf0f1e2d3c4a596ULL + 0x9e37ULL * k);
    TruncatedFit candidate = fit_truncation(residuals, priors, k, config, seed);
    if (candidate.selection_score > best.selection_score) best = std::move(candidate);
  }
  if (best.k == 0) throw FitError("variational fit: no truncation converged");

  // Prune on expected weight, renormalize, and harden assignments.
  const double alpha_sum = priors.alpha0 * best.k + best.counts.sum();
  std::vector<int> kept;
  for (int c = 0; c < best.k; ++c) {
    if (best.posts[c].alpha / alpha_sum >= config.prune_weight) kept.push_back(c);
  }
  if (kept.empty()) throw FitError("variational fit: all components pruned");

  VariationalFit fit;
  fit.elbo_history = best.elbo_history;
  fit.iterations = best.iterations;

  double kept_weight = 0.0;
  for (const int c : kept) kept_weight += best.posts[c].alpha / alpha_sum;
  for (const int c : kept) {
    GaussianComponent comp;
    comp.weight = (best.posts[c].alpha / alpha_sum) / kept_weight;
    comp.mean = best.posts[c].m;
    const Eigen::MatrixXd cov = best.posts[c].psi / (best.posts[c].nu - d - 1.0);
    comp.cov = floor_spd(cov, std::max(1e-8 * cov.trace() / d, 1e-12));
    fit.model.components.push_back(std::move(comp));
  }
  fit.model.support_count = n;

  fit.assignments.resize(n);
  fit.component_counts.assign(kept.size(), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    int best_comp = 0;
    double best_resp = -1.0;
    for (std::size_t c = 0; c < kept.size(); ++c) {
      if (best.resp(i, kept[c]) > best_resp) {
        best_resp = best.resp(i, kept[c]);
        best_comp = static_cast<int>(c);
      }
    }
    fit.assignments[i] = best_comp;
    ++fit.component_counts[best_comp];
  }
  return fit;
}

}  // namespace ice
