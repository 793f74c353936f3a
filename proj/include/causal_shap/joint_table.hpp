#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "json.hpp"

#include "causal_shap/data.hpp"
#include "causal_shap/feature_space.hpp"

namespace cshap {

// Mixed-radix indexing of full assignments over categorical features; the
// last feature varies fastest, so for two binary features code = 2*x1 + x2.
class AssignmentIndex {
 public:
  AssignmentIndex() = default;
  explicit AssignmentIndex(std::vector<std::size_t> radix);
  static AssignmentIndex of(const FeatureSpace& features);

  std::size_t num_features() const { return radix_.size(); }
  std::size_t size() const { return size_; }
  std::size_t radix(std::size_t f) const { return radix_[f]; }
  std::size_t stride(std::size_t f) const { return stride_[f]; }
  std::size_t level(std::size_t code, std::size_t f) const { return (code / stride_[f]) % radix_[f]; }
  // Encodes a row whose entries are level indices stored as doubles.
  std::size_t encode(std::span<const double> row) const;

 private:
  std::vector<std::size_t> radix_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 1;
};

// Full joint probability table over categorical features.
class JointTable {
 public:
  JointTable(FeatureSpace features, std::vector<double> probabilities);

  // Relative frequencies of the observed assignments.
  static JointTable fit(const DataMatrix& data);

  const FeatureSpace& features() const { return features_; }
  std::size_t num_features() const { return features_.size(); }
  const AssignmentIndex& index() const { return index_; }
  const std::vector<double>& probabilities() const { return probs_; }
  double probability(std::size_t code) const { return probs_.at(code); }

  // Mean of each feature's level index.
  std::vector<double> mean_levels() const;

 private:
  FeatureSpace features_;
  AssignmentIndex index_;
  std::vector<double> probs_;
};

// Unnormalized P(X_targets, X_cond | x_fixed) laid out as mass[cond][target];
// entries whose fixed features differ from `fixed_levels` are dropped.
struct ConditionalTable {
  AssignmentIndex target_index;
  AssignmentIndex cond_index;
  std::vector<std::vector<double>> mass;

  double cond_mass(std::size_t c) const;
  // Conditioning code of a row whose conditioning features hold level indices.
  std::size_t cond_code(std::span<const double> row, const std::vector<std::size_t>& cond) const;
};

ConditionalTable conditional_table(const JointTable& table, const std::vector<std::size_t>& targets,
                                   const std::vector<std::size_t>& cond, const std::vector<std::size_t>& fixed,
                                   const std::vector<std::size_t>& fixed_levels);

// Feature space of `n` binary features named x1..xn with levels "0","1".
FeatureSpace binary_features(std::size_t n);

nlohmann::json joint_table_to_json(const JointTable& table);
JointTable joint_table_from_json(const nlohmann::json& doc);

}  // namespace cshap
