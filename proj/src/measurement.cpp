#include "ice/measurement.hpp"

#include <stdexcept>

namespace ice {

std::vector<Eigen::MatrixXd> MeasurementModel::finite_difference_jacobians(
    const BlockValues& blocks, double step) const {
  std::vector<Eigen::MatrixXd> jacobians;
  jacobians.reserve(blocks.size());
  BlockValues perturbed = blocks;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    Eigen::MatrixXd jac(observation_dim(), blocks[i].size());
    for (Eigen::Index j = 0; j < blocks[i].size(); ++j) {
      perturbed[i](j) = blocks[i](j) + step;
      const Eigen::VectorXd plus = evaluate(perturbed);
      perturbed[i](j) = blocks[i](j) - step;
      const Eigen::VectorXd minus = evaluate(perturbed);
      perturbed[i](j) = blocks[i](j);
      jac.col(j) = (plus - minus) / (2.0 * step);
    }
    jacobians.push_back(std::move(jac));
  }
  return jacobians;
}

Eigen::VectorXd PriorModel::evaluate(const BlockValues& blocks) const {
  if (blocks.size() != 1 || blocks[0].size() != dim_)
    throw std::invalid_argument("prior model: bad block layout");
  return blocks[0];
}

std::vector<Eigen::MatrixXd> PriorModel::jacobians(const BlockValues& blocks) const {
  (void)blocks;
  return {Eigen::MatrixXd::Identity(dim_, dim_)};
}

Eigen::VectorXd BetweenModel::evaluate(const BlockValues& blocks) const {
  if (blocks.size() != 2 || blocks[0].size() != dim_ || blocks[1].size() != dim_)
    throw std::invalid_argument("between model: bad block layout");
  return blocks[1] - blocks[0];
}

std::vector<Eigen::MatrixXd> BetweenModel::jacobians(const BlockValues& blocks) const {
  (void)blocks;
  return {-Eigen::MatrixXd::Identity(dim_, dim_), Eigen::MatrixXd::Identity(dim_, dim_)};
}

Eigen::VectorXd RangeModel::evaluate(const BlockValues& blocks) const {
  if (blocks.size() != 1 || blocks[0].size() != anchor_.size())
    throw std::invalid_argument("range model: bad block layout");
  Eigen::VectorXd out(1);
  out(0) = (blocks[0] - anchor_).norm();
  return out;
}

std::vector<Eigen::MatrixXd> RangeModel::jacobians(const BlockValues& blocks) const {
  const Eigen::VectorXd diff = blocks[0] - anchor_;
  const double range = diff.norm();
  if (range == 0.0) throw std::invalid_argument("range model: evaluated at the anchor");
  return {diff.transpose() / range};
}

Eigen::VectorXd PseudorangeModel::evaluate(const BlockValues& blocks) const {
  if (blocks.size() != 2 || blocks[0].size() != anchor_.size() || blocks[1].size() != 1)
    throw std::invalid_argument("pseudorange model: bad block layout");
  Eigen::VectorXd out(1);
  out(0) = (blocks[0] - anchor_).norm() + blocks[1](0);
  return out;
}

std::vector<Eigen::MatrixXd> PseudorangeModel::jacobians(const BlockValues& blocks) const {
  const Eigen::VectorXd diff = blocks[0] - anchor_;
  const double range = diff.norm();
  if (range == 0.0) throw std::invalid_argument("pseudorange model: evaluated at the anchor");
  return {diff.transpose() / range, Eigen::MatrixXd::Ones(1, 1)};
}

LinearModel::LinearModel(std::vector<Eigen::MatrixXd> coefficients, Eigen::VectorXd offset)
    : coefficients_(std::move(coefficients)), offset_(std::move(offset)) {
  if (coefficients_.empty()) throw std::invalid_argument("linear model: no coefficients");
  for (const auto& coeff : coefficients_) {
    if (coeff.rows() != offset_.size())
      throw std::invalid_argument("linear model: coefficient row mismatch");
  }
}

Eigen::VectorXd LinearModel::evaluate(const BlockValues& blocks) const {
  if (blocks.size() != coefficients_.size())
    throw std::invalid_argument("linear model: bad block layout");
  Eigen::VectorXd out = offset_;
  for (std::size_t i = 0; i < blocks.size(); ++i) out += coefficients_[i] * blocks[i];
  return out;
}

std::vector<Eigen::MatrixXd> LinearModel::jacobians(const BlockValues& blocks) const {
  (void)blocks;
  return coefficients_;
}

}  // namespace ice
