#include "causal_shap/feature_space.hpp"

#include <set>

#include "causal_shap/errors.hpp"

namespace cshap {

std::vector<std::size_t> mask_members(FeatureMask m) {
  std::vector<std::size_t> out;
  out.reserve(mask_size(m));
  while (m != 0) {
    out.push_back(static_cast<std::size_t>(std::countr_zero(m)));
    m &= m - 1;
  }
  return out;
}

FeatureMask mask_from(const std::vector<std::size_t>& indices) {
  FeatureMask m = 0;
  for (auto i : indices) m |= feature_bit(i);
  return m;
}

FeatureSpace::FeatureSpace(std::vector<Feature> features) : features_(std::move(features)) {
  if (features_.size() > kMaxFeatures) {
    throw ValidationError("at most " + std::to_string(kMaxFeatures) + " features are supported, got " +
                          std::to_string(features_.size()));
  }
  std::set<std::string> seen;
  for (const auto& f : features_) {
    if (f.name.empty()) throw ValidationError("feature names must be non-empty");
    if (!seen.insert(f.name).second) throw ValidationError("duplicate feature name '" + f.name + "'");
    if (f.kind == FeatureKind::categorical) {
      if (f.levels.empty()) throw ValidationError("categorical feature '" + f.name + "' has no levels");
      std::set<std::string> lv(f.levels.begin(), f.levels.end());
      if (lv.size() != f.levels.size()) {
        throw ValidationError("categorical feature '" + f.name + "' has duplicate levels");
      }
    } else if (!f.levels.empty()) {
      throw ValidationError("continuous feature '" + f.name + "' must not list levels");
    }
  }
}

FeatureSpace FeatureSpace::continuous(const std::vector<std::string>& names) {
  std::vector<Feature> fs;
  fs.reserve(names.size());
  for (const auto& n : names) fs.push_back(Feature{n, FeatureKind::continuous, {}});
  return FeatureSpace(std::move(fs));
}

FeatureSpace FeatureSpace::anonymous(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("x" + std::to_string(i + 1));
  return continuous(names);
}

std::optional<std::size_t> FeatureSpace::find(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t FeatureSpace::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw ValidationError("unknown feature '" + std::string(name) + "'");
}

std::vector<std::string> FeatureSpace::names() const {
  std::vector<std::string> out;
  for (const auto& f : features_) out.push_back(f.name);
  return out;
}

nlohmann::json feature_space_to_json(const FeatureSpace& space) {
  auto arr = nlohmann::json::array();
  for (const auto& f : space.features()) {
    nlohmann::json jf;
    jf["name"] = f.name;
    jf["kind"] = f.kind == FeatureKind::categorical ? "categorical" : "continuous";
    if (f.kind == FeatureKind::categorical) jf["levels"] = f.levels;
    arr.push_back(std::move(jf));
  }
  return arr;
}

FeatureSpace feature_space_from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) throw ValidationError("'features' must be an array");
  std::vector<Feature> fs;
  for (const auto& jf : doc) {
    if (!jf.is_object() || !jf.contains("name") || !jf["name"].is_string()) {
      throw ValidationError("every feature needs a string 'name'");
    }
    Feature f;
    f.name = jf["name"].get<std::string>();
    const auto kind = jf.value("kind", std::string("continuous"));
    if (kind == "categorical") {
      f.kind = FeatureKind::categorical;
      if (!jf.contains("levels") || !jf["levels"].is_array()) {
        throw ValidationError("categorical feature '" + f.name + "' needs a 'levels' array");
      }
      for (const auto& l : jf["levels"]) {
        if (!l.is_string()) throw ValidationError("levels of '" + f.name + "' must be strings");
        f.levels.push_back(l.get<std::string>());
      }
    } else if (kind != "continuous") {
      throw ValidationError("feature '" + f.name + "' has unknown kind '" + kind + "'");
    }
    fs.push_back(std::move(f));
  }
  return FeatureSpace(std::move(fs));
}

}  // namespace cshap
