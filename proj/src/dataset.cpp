#include "ice/dataset.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace ice {

namespace {

constexpr const char* kTruthType = "truth";

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_double(const std::string& text, std::size_t line_no, const std::string& column) {
  try {
    std::size_t consumed = 0;
    const double v = std::stod(text, &consumed);
    if (consumed != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw DatasetFormatError("line " + std::to_string(line_no) + ": column " + column +
                             " is not a number: '" + text + "'");
  }
}

}  // namespace

std::string to_string(ObservationType type) {
  switch (type) {
    case ObservationType::prior: return "prior";
    case ObservationType::between: return "between";
    case ObservationType::range: return "range";
    case ObservationType::pseudorange: return "pseudorange";
  }
  return "unknown";
}

ObservationType observation_type_from_string(const std::string& text) {
  if (text == "prior") return ObservationType::prior;
  if (text == "between") return ObservationType::between;
  if (text == "range") return ObservationType::range;
  if (text == "pseudorange") return ObservationType::pseudorange;
  throw DatasetFormatError("unknown observation type '" + text + "'");
}

std::vector<Observation> Dataset::epoch_view(std::size_t t) const {
  std::vector<Observation> view;
  view.reserve(epochs.at(t).observations.size());
  for (const auto& labeled : epochs.at(t).observations) view.push_back(labeled.observation);
  return view;
}

std::size_t Dataset::count_observations() const {
  std::size_t count = 0;
  for (const auto& epoch : epochs) count += epoch.observations.size();
  return count;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  Eigen::Index max_dim = 1;
  for (const auto& epoch : dataset.epochs)
    for (const auto& obs : epoch.observations)
      max_dim = std::max(max_dim, obs.observation.value.size());
  for (const auto& t : dataset.truth) max_dim = std::max(max_dim, t.size());
  const Eigen::Index cov_entries = max_dim * (max_dim + 1) / 2;

  std::ofstream out(path);
  if (!out) throw DatasetFormatError("cannot open '" + path + "' for writing");

  out << "epoch,type,anchor_id,ax,ay,az,label,dim";
  for (Eigen::Index i = 0; i < max_dim; ++i) out << ",v" << i;
  for (Eigen::Index i = 0; i < cov_entries; ++i) out << ",c" << i;
  out << "\n";

  const auto write_row = [&](std::int64_t epoch, const std::string& type, int anchor_id,
                             const Eigen::Vector3d& anchor, int label,
                             const Eigen::VectorXd& value, const Eigen::MatrixXd& cov) {
    out << epoch << ',' << type << ',' << anchor_id << ',' << format_double(anchor.x()) << ','
        << format_double(anchor.y()) << ',' << format_double(anchor.z()) << ',' << label << ','
        << value.size();
    for (Eigen::Index i = 0; i < max_dim; ++i)
      out << ',' << (i < value.size() ? format_double(value(i)) : "0");
    Eigen::Index written = 0;
    for (Eigen::Index i = 0; i < value.size(); ++i)
      for (Eigen::Index j = i; j < value.size(); ++j, ++written)
        out << ',' << format_double(cov.size() > 0 ? cov(i, j) : 0.0);
    for (; written < cov_entries; ++written) out << ",0";
    out << "\n";
  };

  for (std::size_t t = 0; t < dataset.truth.size(); ++t) {
    write_row(static_cast<std::int64_t>(t), kTruthType, -1, Eigen::Vector3d::Zero(), 0,
              dataset.truth[t], Eigen::MatrixXd());
  }
  for (const auto& epoch : dataset.epochs) {
    for (const auto& labeled : epoch.observations) {
      const auto& obs = labeled.observation;
      write_row(epoch.index, to_string(obs.type), obs.anchor_id, obs.anchor,
                labeled.is_outlier ? 1 : 0, obs.value, obs.cov);
    }
  }
  out.close();

  nlohmann::json meta;
  meta["seed"] = dataset.metadata.seed;
  meta["epsilon"] = dataset.metadata.epsilon;
  meta["k"] = dataset.metadata.inflation;
  meta["prng"] = dataset.metadata.prng;
  meta["position_dim"] = dataset.position_dim;
  meta["has_clock"] = dataset.has_clock;
  auto anchors = nlohmann::json::array();
  for (const auto& a : dataset.metadata.anchors) anchors.push_back({a.x(), a.y(), a.z()});
  meta["anchors"] = anchors;
  std::ofstream meta_out(path + ".meta.json");
  if (!meta_out) throw DatasetFormatError("cannot open '" + path + ".meta.json' for writing");
  meta_out << meta.dump(2) << "\n";
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetFormatError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw DatasetFormatError("empty file '" + path + "'");
  const auto header = split_line(line);
  const std::vector<std::string> fixed = {"epoch", "type", "anchor_id", "ax",
                                          "ay",    "az",   "label",     "dim"};
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    if (i >= header.size() || header[i] != fixed[i])
      throw DatasetFormatError("line 1: missing column " + fixed[i]);
  }
  Eigen::Index max_dim = 0;
  for (std::size_t i = fixed.size(); i < header.size(); ++i) {
    if (header[i] == "v" + std::to_string(max_dim)) ++max_dim;
  }
  if (max_dim == 0) throw DatasetFormatError("line 1: missing column v0");
  const Eigen::Index cov_entries = max_dim * (max_dim + 1) / 2;
  const std::size_t expected_fields = fixed.size() + max_dim + cov_entries;
  for (Eigen::Index i = 0; i < cov_entries; ++i) {
    const std::size_t at = fixed.size() + max_dim + i;
    if (at >= header.size() || header[at] != "c" + std::to_string(i))
      throw DatasetFormatError("line 1: missing column c" + std::to_string(i));
  }

  Dataset dataset;
  std::map<std::int64_t, DatasetEpoch> epochs;
  std::map<std::int64_t, Eigen::VectorXd> truth;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_line(line);
    if (fields.size() != expected_fields) {
      const std::size_t missing = fields.size() < expected_fields ? fields.size() : 0;
      const std::string column =
          missing < fixed.size()
              ? fixed[missing]
              : (missing < fixed.size() + static_cast<std::size_t>(max_dim)
                     ? "v" + std::to_string(missing - fixed.size())
                     : "c" + std::to_string(missing - fixed.size() - max_dim));
      throw DatasetFormatError("line " + std::to_string(line_no) + ": missing column " + column);
    }
    const std::int64_t epoch =
        static_cast<std::int64_t>(parse_double(fields[0], line_no, "epoch"));
    const std::string& type = fields[1];
    const int anchor_id = static_cast<int>(parse_double(fields[2], line_no, "anchor_id"));
    Eigen::Vector3d anchor(parse_double(fields[3], line_no, "ax"),
                           parse_double(fields[4], line_no, "ay"),
                           parse_double(fields[5], line_no, "az"));
    const int label = static_cast<int>(parse_double(fields[6], line_no, "label"));
    const Eigen::Index dim = static_cast<Eigen::Index>(parse_double(fields[7], line_no, "dim"));
    if (dim < 1 || dim > max_dim)
      throw DatasetFormatError("line " + std::to_string(line_no) + ": dim out of range");

    Eigen::VectorXd value(dim);
    for (Eigen::Index i = 0; i < dim; ++i)
      value(i) = parse_double(fields[8 + i], line_no, "v" + std::to_string(i));
    Eigen::MatrixXd cov(dim, dim);
    Eigen::Index at = 0;
    for (Eigen::Index i = 0; i < dim; ++i) {
      for (Eigen::Index j = i; j < dim; ++j, ++at) {
        const double entry =
            parse_double(fields[8 + max_dim + at], line_no, "c" + std::to_string(at));
        cov(i, j) = entry;
        cov(j, i) = entry;
      }
    }

    if (type == kTruthType) {
      truth[epoch] = value;
      continue;
    }
    Observation obs;
    obs.type = observation_type_from_string(type);
    obs.anchor_id = anchor_id;
    obs.anchor = anchor;
    obs.value = value;
    obs.cov = cov;
    if (obs.cov.size() > 0) {
      const Eigen::LLT<Eigen::MatrixXd> llt(obs.cov);
      if (llt.info() != Eigen::Success)
        throw DatasetFormatError("line " + std::to_string(line_no) +
                                 ": covariance not positive definite");
    }
    auto& slot = epochs[epoch];
    slot.index = epoch;
    slot.observations.push_back({std::move(obs), label != 0});
  }

  for (auto& [index, epoch] : epochs) dataset.epochs.push_back(std::move(epoch));
  for (auto& [index, value] : truth) dataset.truth.push_back(std::move(value));

  std::ifstream meta_in(path + ".meta.json");
  if (meta_in) {
    nlohmann::json meta;
    meta_in >> meta;
    dataset.metadata.seed = meta.value("seed", std::uint64_t{0});
    dataset.metadata.epsilon = meta.value("epsilon", 0.0);
    dataset.metadata.inflation = meta.value("k", 1.0);
    dataset.metadata.prng = meta.value("prng", "splitmix64");
    dataset.position_dim = meta.value("position_dim", 2);
    dataset.has_clock = meta.value("has_clock", false);
    if (meta.contains("anchors")) {
      for (const auto& a : meta["anchors"])
        dataset.metadata.anchors.emplace_back(a[0].get<double>(), a[1].get<double>(),
                                              a[2].get<double>());
    }
  } else if (!dataset.truth.empty()) {
    dataset.position_dim = dataset.truth.front().size();
    dataset.has_clock = false;
  }
  return dataset;
}

}  // namespace ice
