#include "ice/state_vector.hpp"

#include <stdexcept>

namespace ice {

std::string to_string(const VariableKey& key) {
  return key.name + "@" + std::to_string(key.epoch);
}

void StateVector::add(const VariableKey& key, Eigen::VectorXd value) {
  if (has(key)) throw std::invalid_argument("duplicate variable " + to_string(key));
  if (value.size() == 0) throw std::invalid_argument("empty variable block " + to_string(key));
  index_[key] = blocks_.size();
  blocks_.push_back({key, std::move(value), total_dim_});
  total_dim_ += blocks_.back().value.size();
}

const Eigen::VectorXd& StateVector::at(const VariableKey& key) const {
  const auto it = index_.find(key);
  if (it == index_.end()) throw std::out_of_range("missing variable " + to_string(key));
  return blocks_[it->second].value;
}

void StateVector::set(const VariableKey& key, const Eigen::VectorXd& value) {
  const auto it = index_.find(key);
  if (it == index_.end()) throw std::out_of_range("missing variable " + to_string(key));
  if (value.size() != blocks_[it->second].value.size())
    throw std::invalid_argument("dimension change for variable " + to_string(key));
  blocks_[it->second].value = value;
}

Eigen::Index StateVector::offset_of(const VariableKey& key) const {
  const auto it = index_.find(key);
  if (it == index_.end()) throw std::out_of_range("missing variable " + to_string(key));
  return blocks_[it->second].offset;
}

Eigen::VectorXd StateVector::flatten() const {
  Eigen::VectorXd out(total_dim_);
  for (const auto& block : blocks_) out.segment(block.offset, block.value.size()) = block.value;
  return out;
}

void StateVector::apply_delta(const Eigen::VectorXd& delta) {
  if (delta.size() != total_dim_) throw std::invalid_argument("delta dimension mismatch");
  for (auto& block : blocks_) block.value += delta.segment(block.offset, block.value.size());
}

StateVector StateVector::with_delta(const Eigen::VectorXd& delta) const {
  StateVector out = *this;
  out.apply_delta(delta);
  return out;
}

double StateVector::max_block_distance(const StateVector& other) const {
  double max_move = 0.0;
  for (const auto& block : blocks_) {
    if (!other.has(block.key)) continue;
    const double move = (block.value - other.at(block.key)).cwiseAbs().maxCoeff();
    max_move = std::max(max_move, move);
  }
  return max_move;
}

}  // namespace ice
