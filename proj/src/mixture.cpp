#include "ice/mixture.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace ice {

void MixtureModel::validate() const {
  if (components.empty()) throw std::invalid_argument("mixture: no components");
  if (support_count < 0) throw std::invalid_argument("mixture: negative support count");
  const Eigen::Index d = components.front().dim();
  double weight_sum = 0.0;
  for (const auto& comp : components) {
    if (comp.dim() != d) throw std::invalid_argument("mixture: component dimension mismatch");
    if (comp.weight <= 0.0 || comp.weight > 1.0)
      throw std::invalid_argument("mixture: component weight outside (0, 1]");
    if (comp.cov.rows() != d || comp.cov.cols() != d)
      throw std::invalid_argument("mixture: covariance shape mismatch");
    cholesky_lower(comp.cov);  // throws if not SPD
    weight_sum += comp.weight;
  }
  if (std::abs(weight_sum - 1.0) > 1e-9)
    throw std::invalid_argument("mixture: weights sum to " + std::to_string(weight_sum));
}

MixtureModel unit_mixture(Eigen::Index dim, std::int64_t support_count) {
  MixtureModel model;
  model.components.push_back(standard_component(dim));
  model.support_count = support_count;
  return model;
}

double component_log_density(const GaussianComponent& comp, const Eigen::VectorXd& r) {
  if (r.size() != comp.dim())
    throw std::invalid_argument("component_log_density: dimension mismatch");
  return std::log(comp.weight) + log_gaussian_density(r, comp.mean, comp.cov);
}

std::size_t max_mix_select(const MixtureModel& model, const Eigen::VectorXd& r) {
  if (model.components.empty()) throw std::invalid_argument("max_mix_select: empty model");
  std::size_t best = 0;
  double best_density = component_log_density(model.components[0], r);
  for (std::size_t m = 1; m < model.components.size(); ++m) {
    const double density = component_log_density(model.components[m], r);
    if (density > best_density) {
      best_density = density;
      best = m;
    }
  }
  return best;
}

std::string mixture_to_json(const MixtureModel& model) {
  nlohmann::json j;
  j["support_count"] = model.support_count;
  j["components"] = nlohmann::json::array();
  for (const auto& comp : model.components) {
    nlohmann::json jc;
    jc["w"] = comp.weight;
    jc["mu"] = std::vector<double>(comp.mean.data(), comp.mean.data() + comp.mean.size());
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < comp.cov.rows(); ++i) {
      std::vector<double> row(comp.cov.cols());
      for (Eigen::Index j2 = 0; j2 < comp.cov.cols(); ++j2) row[j2] = comp.cov(i, j2);
      rows.push_back(row);
    }
    jc["cov"] = rows;
    j["components"].push_back(jc);
  }
  return j.dump();
}

MixtureModel mixture_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  MixtureModel model;
  model.support_count = j.at("support_count").get<std::int64_t>();
  for (const auto& jc : j.at("components")) {
    GaussianComponent comp;
    comp.weight = jc.at("w").get<double>();
    const auto mu = jc.at("mu").get<std::vector<double>>();
    comp.mean = Eigen::Map<const Eigen::VectorXd>(mu.data(), mu.size());
    const auto& rows = jc.at("cov");
    comp.cov.resize(rows.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto row = rows[i].get<std::vector<double>>();
      if (row.size() != rows.size())
        throw std::invalid_argument("mixture json: covariance not square");
      comp.cov.row(static_cast<Eigen::Index>(i)) =
          Eigen::Map<const Eigen::RowVectorXd>(row.data(), row.size());
    }
    model.components.push_back(std::move(comp));
  }
  return model;
}

}  // namespace ice
