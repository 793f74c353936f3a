#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace cshap {

// Subsets of features are bit masks; the engine supports up to 64 features.
using FeatureMask = std::uint64_t;
inline constexpr std::size_t kMaxFeatures = 64;

constexpr FeatureMask feature_bit(std::size_t i) { return FeatureMask{1} << i; }

constexpr FeatureMask full_mask(std::size_t n) {
  return n >= 64 ? ~FeatureMask{0} : (feature_bit(n) - 1);
}

constexpr bool has_feature(FeatureMask m, std::size_t i) { return (m >> i) & 1U; }

inline std::size_t mask_size(FeatureMask m) { return static_cast<std::size_t>(std::popcount(m)); }

// Ascending list of indices contained in `m`.
std::vector<std::size_t> mask_members(FeatureMask m);

FeatureMask mask_from(const std::vector<std::size_t>& indices);

enum class FeatureKind { continuous, categorical };

struct Feature {
  std::string name;
  FeatureKind kind = FeatureKind::continuous;
  // Categorical levels; a categorical value is carried numerically as its level index.
  std::vector<std::string> levels;

  bool operator==(const Feature&) const = default;
};

class FeatureSpace {
 public:
  FeatureSpace() = default;
  explicit FeatureSpace(std::vector<Feature> features);

  // Convenience: all-continuous space with the given names.
  static FeatureSpace continuous(const std::vector<std::string>& names);
  // All-continuous space named x1..xn.
  static FeatureSpace anonymous(std::size_t n);

  std::size_t size() const { return features_.size(); }
  const Feature& operator[](std::size_t i) const { return features_.at(i); }
  const std::vector<Feature>& features() const { return features_; }

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;

  bool is_categorical(std::size_t i) const { return features_.at(i).kind == FeatureKind::categorical; }
  std::size_t num_levels(std::size_t i) const { return features_.at(i).levels.size(); }
  std::vector<std::string> names() const;

  bool operator==(const FeatureSpace&) const = default;

 private:
  std::vector<Feature> features_;
};

nlohmann::json feature_space_to_json(const FeatureSpace& space);
FeatureSpace feature_space_from_json(const nlohmann::json& doc);

}  // namespace cshap
