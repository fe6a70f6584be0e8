#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ice {

enum class ObservationType { prior, between, range, pseudorange };

std::string to_string(ObservationType type);
ObservationType observation_type_from_string(const std::string& text);

// One raw measurement as stored in a dataset. For anchored observations
// (range, pseudorange) `anchor` is the transmitter position; for prior and
// between observations `anchor_id` selects the target block:
// 0 = position, 1 = clock.
struct Observation {
  ObservationType type = ObservationType::range;
  int anchor_id = -1;
  Eigen::Vector3d anchor = Eigen::Vector3d::Zero();
  Eigen::VectorXd value;
  Eigen::MatrixXd cov;
};

struct LabeledObservation {
  Observation observation;
  bool is_outlier = false;  // generator diagnostic, never shown to estimators
};

struct DatasetEpoch {
  std::int64_t index = 0;
  std::vector<LabeledObservation> observations;
};

struct DatasetMetadata {
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  double inflation = 1.0;
  std::string prng = "splitmix64";
  std::vector<Eigen::Vector3d> anchors;
};

struct Dataset {
  std::vector<DatasetEpoch> epochs;
  // Ground truth per epoch: position components then clock bias when present.
  std::vector<Eigen::VectorXd> truth;
  Eigen::Index position_dim = 2;
  bool has_clock = false;
  DatasetMetadata metadata;

  // Estimator-facing view of one epoch: observations without labels.
  std::vector<Observation> epoch_view(std::size_t t) const;
  std::size_t count_observations() const;
};

class DatasetFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// CSV schema (documented in README): fixed columns
//   epoch,type,anchor_id,ax,ay,az,label,dim,v0..v{p-1},c0..c{q-1}
// with p the widest value dimension in the file and q = p(p+1)/2 covariance
// entries stored as the upper triangle row-major. Ground truth rows use
// type "truth". Values are printed with 17 significant digits so a
// save/load round trip is bit exact. A JSON sidecar <path>.meta.json holds
// {seed, epsilon, k, anchors, prng}.
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace ice
