#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace ice {

using BlockValues = std::vector<Eigen::VectorXd>;

// Measurement function h(X): maps the connected variable blocks to the
// observation space. Jacobians default to central finite differences;
// shipped models override with analytic expressions.
class MeasurementModel {
 public:
  virtual ~MeasurementModel() = default;

  virtual Eigen::Index observation_dim() const = 0;
  virtual Eigen::VectorXd evaluate(const BlockValues& blocks) const = 0;

  // One Jacobian per connected block, obs_dim x block_dim.
  virtual std::vector<Eigen::MatrixXd> jacobians(const BlockValues& blocks) const {
    return finite_difference_jacobians(blocks);
  }

  std::vector<Eigen::MatrixXd> finite_difference_jacobians(const BlockValues& blocks,
                                                           double step = 1e-6) const;
};

// h(x) = x.
class PriorModel : public MeasurementModel {
 public:
  explicit PriorModel(Eigen::Index dim) : dim_(dim) {}
  Eigen::Index observation_dim() const override { return dim_; }
  Eigen::VectorXd evaluate(const BlockValues& blocks) const override;
  std::vector<Eigen::MatrixXd> jacobians(const BlockValues& blocks) const override;

 private:
  Eigen::Index dim_;
};

// h(a, b) = b - a.
class BetweenModel : public MeasurementModel {
 public:
  explicit BetweenModel(Eigen::Index dim) : dim_(dim) {}
  Eigen::Index observation_dim() const override { return dim_; }
  Eigen::VectorXd evaluate(const BlockValues& blocks) const override;
  std::vector<Eigen::MatrixXd> jacobians(const BlockValues& blocks) const override;

 private:
  Eigen::Index dim_;
};

// h(p) = ||p - anchor||.
class RangeModel : public MeasurementModel {
 public:
  explicit RangeModel(Eigen::VectorXd anchor) : anchor_(std::move(anchor)) {}
  Eigen::Index observation_dim() const override { return 1; }
  Eigen::VectorXd evaluate(const BlockValues& blocks) const override;
  std::vector<Eigen::MatrixXd> jacobians(const BlockValues& blocks) const override;
  const Eigen::VectorXd& anchor() const { return anchor_; }

 private:
  Eigen::VectorXd anchor_;
};

// h(p, clk) = ||p - anchor|| + clk. Range plus a receiver clock bias state.
class PseudorangeModel : public MeasurementModel {
 public:
  explicit PseudorangeModel(Eigen::VectorXd anchor) : anchor_(std::move(anchor)) {}
  Eigen::Index observation_dim() const override { return 1; }
  Eigen::VectorXd evaluate(const BlockValues& blocks) const override;
  std::vector<Eigen::MatrixXd> jacobians(const BlockValues& blocks) const override;
  const Eigen::VectorXd& anchor() const { return anchor_; }

 private:
  Eigen::VectorXd anchor_;
};

// h(x_1..x_n) = offset + sum_i H_i x_i. Useful for constructing exactly
// linear problems in tests.
class LinearModel : public MeasurementModel {
 public:
  LinearModel(std::vector<Eigen::MatrixXd> coefficients, Eigen::VectorXd offset);
  Eigen::Index observation_dim() const override { return offset_.size(); }
  Eigen::VectorXd evaluate(const BlockValues& blocks) const override;
  std::vector<Eigen::MatrixXd> jacobians(const BlockValues& blocks) const override;

 private:
  std::vector<Eigen::MatrixXd> coefficients_;
  Eigen::VectorXd offset_;
};

}  // namespace ice
