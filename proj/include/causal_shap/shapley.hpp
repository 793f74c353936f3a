#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "causal_shap/chain_graph.hpp"
#include "causal_shap/value_function.hpp"

namespace cshap {

enum class Symmetry { symmetric, asymmetric };

std::string to_string(Symmetry s);
Symmetry parse_symmetry(std::string_view text);

enum class PermutationMode { exact_uniform, exact_asymmetric, sampled_uniform, sampled_asymmetric };

inline constexpr std::size_t kDefaultEnumerationCap = 10;
// Linear-extension counts are kept in 64 bits, which holds 20!.
inline constexpr std::size_t kMaxEnumerationCap = 20;

struct PermutationDistribution {
  PermutationMode mode = PermutationMode::exact_uniform;
  std::size_t n_permutations = 0;
  const ChainGraph* graph = nullptr;
  std::uint64_t seed = 0;
  // Sampled asymmetric mode: draw uniform permutations and reject the
  // inconsistent ones instead of sampling linear extensions directly.
  bool rejection = false;
  std::size_t enumeration_cap = kDefaultEnumerationCap;

  static PermutationDistribution exact(Symmetry symmetry, const ChainGraph* graph = nullptr);
  static PermutationDistribution sampled(Symmetry symmetry, std::size_t n_permutations, std::uint64_t seed,
                                         const ChainGraph* graph = nullptr);

  bool is_sampled() const {
    return mode == PermutationMode::sampled_uniform || mode == PermutationMode::sampled_asymmetric;
  }
  bool is_asymmetric() const {
    return mode == PermutationMode::exact_asymmetric || mode == PermutationMode::sampled_asymmetric;
  }
  Symmetry symmetry() const { return is_asymmetric() ? Symmetry::asymmetric : Symmetry::symmetric; }
};

// Number of orderings of every feature subset that respect the precedence
// constraints restricted to the subset. Entry T is indexed by its mask.
class LinearExtensionCounts {
 public:
  // `must_precede[f]`: features that have to come before f. Empty masks give |T|!.
  explicit LinearExtensionCounts(std::vector<FeatureMask> must_precede);
  static LinearExtensionCounts of(const ChainGraph* graph, std::size_t n);

  std::size_t num_features() const { return must_precede_.size(); }
  std::uint64_t count(FeatureMask subset) const { return counts_.at(subset); }
  std::uint64_t total() const { return counts_.back(); }
  // Down-closed under the constraints.
  bool is_ideal(FeatureMask subset) const;
  // Uniformly random consistent permutation.
  Permutation sample(std::mt19937_64& engine) const;

 private:
  std::vector<FeatureMask> must_precede_;
  std::vector<std::uint64_t> counts_;
};

// Uniform draw over consistent permutations; exact for n <= kMaxEnumerationCap,
// otherwise a random topological sort over features with uniform tie-breaking.
Permutation sample_consistent_permutation(const ChainGraph& graph, std::mt19937_64& engine);
Permutation sample_uniform_permutation(std::size_t n, std::mt19937_64& engine);

// Snapshot of memoized values, rounded to a common power-of-two grid so that
// sums and differences of values are free of rounding: telescoping sums are
// bit-identical across permutations and direct + indirect == total exactly.
class ValueTable {
 public:
  // Evaluates every request through the memo and snaps the results.
  static ValueTable build(ValueMemo& memo, const std::vector<std::pair<FeatureMask, FeatureMask>>& requests,
                          std::size_t threads = 1);

  std::size_t num_features() const { return n_; }
  Variant variant() const { return variant_; }
  double quantum() const { return quantum_; }

  ValueEstimate value(FeatureMask coalition) const;
  ValueEstimate mixed(FeatureMask coalition, std::size_t feature) const;
  // Grid units of the snapped values.
  std::int64_t value_units(FeatureMask coalition) const;
  std::int64_t mixed_units(FeatureMask coalition, std::size_t feature) const;

 private:
  std::size_t n_ = 0;
  Variant variant_ = Variant::marginal;
  double quantum_ = 1.0;
  std::map<FeatureMask, std::pair<std::int64_t, ValueEstimate>> values_;
  std::map<std::pair<FeatureMask, std::size_t>, std::pair<std::int64_t, ValueEstimate>> mixed_;
};

// Coalitions (and mixed terms, when decomposing) that one permutation touches.
std::vector<std::pair<FeatureMask, FeatureMask>> permutation_requests(const Permutation& perm, bool decompose);

struct ContributionRecord {
  std::size_t feature = 0;
  Permutation permutation;
  double total = 0.0;
  double direct = 0.0;
  double indirect = 0.0;
  double std_error = 0.0;
  double direct_std_error = 0.0;
  double indirect_std_error = 0.0;
};

// φ_i(π) = v(pred ∪ i) − v(pred).
ContributionRecord contribution(const Permutation& perm, std::size_t feature, const ValueTable& table);
// Adds the split into direct (clamping x_i in the model input) and indirect
// (the effect of intervening on x_i on the other features) parts.
ContributionRecord decompose_effects(const Permutation& perm, std::size_t feature, const ValueTable& table);
// Σ_i φ_i(π).
double permutation_sum(const Permutation& perm, const ValueTable& table);

struct FeatureAttribution {
  std::string feature;
  double phi = 0.0;
  double direct = 0.0;
  double indirect = 0.0;
  double std_error = 0.0;
  double direct_std_error = 0.0;
  double indirect_std_error = 0.0;

  bool operator==(const FeatureAttribution&) const = default;
};

struct AttributionReport {
  std::vector<FeatureAttribution> features;
  double f0 = 0.0;
  double f0_std_error = 0.0;
  double fx = 0.0;
  Variant variant = Variant::causal;
  Symmetry symmetry = Symmetry::symmetric;
  // 0 for exact enumeration.
  std::size_t n_permutations = 0;
  std::uint64_t seed = 0;
  // 0 for exact value functions.
  std::size_t n_samples = 0;
  bool decomposed = false;

  double phi_sum() const;
  // Standard error of Σφ, combining feature errors as if independent.
  double phi_sum_std_error() const;
  bool operator==(const AttributionReport&) const = default;
};

struct ShapleyOptions {
  bool decompose = false;
  std::size_t threads = 1;
};

AttributionReport shapley_values(const ValueFunction& fn, const PermutationDistribution& dist,
                                 const std::vector<std::string>& feature_names, const ShapleyOptions& options = {});

// Report files. The CSV form starts with "# key,value" metadata rows.
std::string report_to_csv(const AttributionReport& report);
AttributionReport report_from_csv(const std::string& text);
nlohmann::json report_to_json(const AttributionReport& report);
AttributionReport report_from_json(const nlohmann::json& doc);

}  // namespace cshap
