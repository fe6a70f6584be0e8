#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ice/gaussian.hpp"

namespace ice {

// Gaussian mixture acting as a measurement uncertainty model. support_count
// tracks how many residuals the model has characterized; the merge step uses
// it as the effective sample size of the prior model.
struct MixtureModel {
  std::vector<GaussianComponent> components;
  std::int64_t support_count = 0;

  Eigen::Index dim() const { return components.empty() ? 0 : components.front().dim(); }
  std::size_t size() const { return components.size(); }

  // Checks weights sum to one, dimensions agree and covariances are SPD.
  void validate() const;
};

// Single-component model w=1, N(0, I) with the given support.
MixtureModel unit_mixture(Eigen::Index dim, std::int64_t support_count);

// log(w) + log N(r | mu, cov).
double component_log_density(const GaussianComponent& comp, const Eigen::VectorXd& r);

// Index of the component maximizing the weighted density at r; ties resolve
// to the lowest index. Throws std::invalid_argument on an empty model.
std::size_t max_mix_select(const MixtureModel& model, const Eigen::VectorXd& r);

// JSON snapshot format: {"components":[{"w":..,"mu":[..],"cov":[[..]]}],
// "support_count":N}.
std::string mixture_to_json(const MixtureModel& model);
MixtureModel mixture_from_json(const std::string& text);

}  // namespace ice
