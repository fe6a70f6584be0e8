#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ice {

// Identifier of one estimated variable block: a name plus the epoch stamp it
// belongs to (e.g. {"x", 12} for the position at epoch 12).
struct VariableKey {
  std::string name;
  std::int64_t epoch = 0;

  friend auto operator<=>(const VariableKey&, const VariableKey&) = default;
};

std::string to_string(const VariableKey& key);

// Ordered collection of variable blocks. Block offsets follow insertion
// order and define the column layout of the linearized system.
class StateVector {
 public:
  void add(const VariableKey& key, Eigen::VectorXd value);

  bool has(const VariableKey& key) const { return index_.count(key) > 0; }
  std::size_t size() const { return blocks_.size(); }
  Eigen::Index dim() const { return total_dim_; }

  const Eigen::VectorXd& at(const VariableKey& key) const;
  void set(const VariableKey& key, const Eigen::VectorXd& value);
  Eigen::Index offset_of(const VariableKey& key) const;

  const VariableKey& key_at(std::size_t i) const { return blocks_[i].key; }
  const Eigen::VectorXd& value_at(std::size_t i) const { return blocks_[i].value; }

  // Concatenation of all block values in layout order.
  Eigen::VectorXd flatten() const;

  // In-place x += delta, with delta laid out like flatten().
  void apply_delta(const Eigen::VectorXd& delta);

  StateVector with_delta(const Eigen::VectorXd& delta) const;

  // Largest blockwise infinity-norm difference against another state with
  // the same layout; used for relinearization triggers.
  double max_block_distance(const StateVector& other) const;

 private:
  struct Block {
    VariableKey key;
    Eigen::VectorXd value;
    Eigen::Index offset;
  };

  std::vector<Block> blocks_;
  std::map<VariableKey, std::size_t> index_;
  Eigen::Index total_dim_ = 0;
};

}  // namespace ice
