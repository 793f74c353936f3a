#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "causal_shap/conditioning.hpp"
#include "causal_shap/shapley.hpp"

namespace cshap::cli {

struct ModelSpec {
  // "linear", "table" or "external"
  std::string type = "linear";
  double intercept = 0.0;
  std::vector<double> coefficients;
  std::vector<double> outputs;  // table: one output per joint level assignment
  std::string command;          // external
  double timeout_s = 60.0;
  std::size_t batch_size = 0;   // external: rows per request, 0 = one request per coalition

  bool operator==(const ModelSpec&) const = default;
};

struct RunConfig {
  std::string graph;  // optional for marginal/conditional runs
  std::string data;
  ModelSpec model;
  std::vector<std::size_t> instance_rows;  // 0-based rows of the data file
  nlohmann::json instance_vectors = nlohmann::json::array();  // numbers, or level names for categorical features
  std::string distribution = "gaussian";  // or "discrete"
  std::string value_function = "monte_carlo";  // or "exact"
  Variant variant = Variant::causal;
  Symmetry symmetry = Symmetry::symmetric;
  std::size_t n_samples = 1000;
  // Unset: exact enumeration up to the cap, sampling above it. 0: exact.
  std::optional<std::size_t> n_permutations;
  std::uint64_t seed = 0;
  bool decompose = false;
  std::string output = ".";
  std::string format = "csv";  // or "json"
  std::optional<double> regularization;
  bool antithetic = false;
  bool per_feature_confounded = false;
  std::size_t threads = 1;

  bool operator==(const RunConfig&) const = default;
};

// Relative paths in the document are resolved against `base_dir`.
RunConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

// Permutations drawn when the feature count exceeds the enumeration cap and
// no count is configured.
inline constexpr std::size_t kDefaultSampledPermutations = 1000;

}  // namespace cshap::cli
