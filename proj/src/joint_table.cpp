#include "causal_shap/joint_table.hpp"

#include <cmath>

#include "causal_shap/errors.hpp"

namespace cshap {

AssignmentIndex::AssignmentIndex(std::vector<std::size_t> radix) : radix_(std::move(radix)) {
  stride_.assign(radix_.size(), 1);
  size_ = 1;
  for (std::size_t k = radix_.size(); k-- > 0;) {
    if (radix_[k] == 0) throw ValidationError("feature with zero levels");
    stride_[k] = size_;
    if (size_ > (std::size_t{1} << 40) / radix_[k]) throw ValidationError("joint table is too large");
    size_ *= radix_[k];
  }
}

AssignmentIndex AssignmentIndex::of(const FeatureSpace& features) {
  std::vector<std::size_t> radix;
  for (std::size_t f = 0; f < features.size(); ++f) {
    if (!features.is_categorical(f)) {
      throw ValidationError("feature '" + features[f].name + "' is continuous; a table needs categorical features");
    }
    radix.push_back(features.num_levels(f));
  }
  return AssignmentIndex(std::move(radix));
}

std::size_t AssignmentIndex::encode(std::span<const double> row) const {
  if (row.size() != radix_.size()) throw ValidationError("row width does not match the table");
  std::size_t code = 0;
  for (std::size_t f = 0; f < radix_.size(); ++f) {
    const double v = row[f];
    if (!(v >= 0.0) || v != std::floor(v) || static_cast<std::size_t>(v) >= radix_[f]) {
      throw ValidationError("value " + std::to_string(v) + " is not a level index of feature " + std::to_string(f));
    }
    code += static_cast<std::size_t>(v) * stride_[f];
  }
  return code;
}

JointTable::JointTable(FeatureSpace features, std::vector<double> probabilities)
    : features_(std::move(features)), index_(AssignmentIndex::of(features_)), probs_(std::move(probabilities)) {
  if (probs_.size() != index_.size()) {
    throw ValidationError("joint table needs " + std::to_string(index_.size()) + " probabilities, got " +
                          std::to_string(probs_.size()));
  }
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("joint probabilities must be finite and non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("joint probabilities sum to " + std::to_string(total));
}

JointTable JointTable::fit(const DataMatrix& data) {
  const auto index = AssignmentIndex::of(data.features);
  if (data.rows.rows() == 0) throw ValidationError("cannot fit a joint table to zero rows");
  std::vector<double> counts(index.size(), 0.0);
  for (Eigen::Index r = 0; r < data.rows.rows(); ++r) {
    const auto row = data.rows.row(r);
    counts[index.encode(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())))] += 1.0;
  }
  for (auto& c : counts) c /= static_cast<double>(data.rows.rows());
  return JointTable(data.features, std::move(counts));
}

std::vector<double> JointTable::mean_levels() const {
  std::vector<double> mean(num_features(), 0.0);
  for (std::size_t code = 0; code < probs_.size(); ++code) {
    for (std::size_t f = 0; f < num_features(); ++f) mean[f] += probs_[code] * static_cast<double>(index_.level(code, f));
  }
  return mean;
}

double ConditionalTable::cond_mass(std::size_t c) const {
  double total = 0.0;
  for (double v : mass.at(c)) total += v;
  return total;
}

std::size_t ConditionalTable::cond_code(std::span<const double> row, const std::vector<std::size_t>& cond) const {
  std::size_t c = 0;
  for (std::size_t j = 0; j < cond.size(); ++j) c += static_cast<std::size_t>(row[cond[j]]) * cond_index.stride(j);
  return c;
}

ConditionalTable conditional_table(const JointTable& table, const std::vector<std::size_t>& targets,
                                   const std::vector<std::size_t>& cond, const std::vector<std::size_t>& fixed,
                                   const std::vector<std::size_t>& fixed_levels) {
  const auto& index = table.index();
  std::vector<std::size_t> tr, cr;
  for (auto t : targets) tr.push_back(index.radix(t));
  for (auto c : cond) cr.push_back(index.radix(c));
  ConditionalTable out{AssignmentIndex(tr), AssignmentIndex(cr), {}};
  out.mass.assign(out.cond_index.size(), std::vector<double>(out.target_index.size(), 0.0));
  for (std::size_t code = 0; code < index.size(); ++code) {
    const double p = table.probability(code);
    if (p == 0.0) continue;
    bool match = true;
    for (std::size_t j = 0; j < fixed.size() && match; ++j) match = index.level(code, fixed[j]) == fixed_levels[j];
    if (!match) continue;
    std::size_t t = 0, c = 0;
    for (std::size_t j = 0; j < targets.size(); ++j) t += index.level(code, targets[j]) * out.target_index.stride(j);
    for (std::size_t j = 0; j < cond.size(); ++j) c += index.level(code, cond[j]) * out.cond_index.stride(j);
    out.mass[c][t] += p;
  }
  return out;
}

FeatureSpace binary_features(std::size_t n) {
  std::vector<Feature> fs;
  for (std::size_t i = 0; i < n; ++i) fs.push_back(Feature{"x" + std::to_string(i + 1), FeatureKind::categorical, {"0", "1"}});
  return FeatureSpace(std::move(fs));
}

nlohmann::json joint_table_to_json(const JointTable& table) {
  nlohmann::json doc;
  doc["features"] = feature_space_to_json(table.features());
  doc["probabilities"] = table.probabilities();
  return doc;
}

JointTable joint_table_from_json(const nlohmann::json& doc) {
  try {
    return JointTable(feature_space_from_json(doc.at("features")), doc.at("probabilities").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed joint table: ") + e.what());
  }
}

}  // namespace cshap
