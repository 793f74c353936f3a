#include "causal_shap/cli/config.hpp"

#include <fstream>
#include <set>

#include "causal_shap/errors.hpp"

namespace cshap::cli {

namespace {

std::string resolve(const std::string& path, const std::filesystem::path& base) {
  if (path.empty() || base.empty()) return path;
  const std::filesystem::path p(path);
  return p.is_absolute() ? path : (base / p).lexically_normal().string();
}

void reject_unknown(const nlohmann::json& doc, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) throw ValidationError("unknown key '" + key + "' in " + where);
  }
}

ModelSpec model_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ValidationError("'model' must be an object");
  ModelSpec m;
  m.type = doc.at("type").get<std::string>();
  if (m.type == "linear") {
    reject_unknown(doc, {"type", "intercept", "coefficients"}, "the linear model");
    m.intercept = doc.value("intercept", 0.0);
    m.coefficients = doc.at("coefficients").get<std::vector<double>>();
  } else if (m.type == "table") {
    reject_unknown(doc, {"type", "outputs"}, "the table model");
    m.outputs = doc.at("outputs").get<std::vector<double>>();
  } else if (m.type == "external") {
    reject_unknown(doc, {"type", "command", "timeout_s", "batch_size"}, "the external model");
    m.command = doc.at("command").get<std::string>();
    m.timeout_s = doc.value("timeout_s", 60.0);
    m.batch_size = doc.value("batch_size", std::size_t{0});
    if (m.command.empty()) throw ValidationError("external model needs a command");
    if (!(m.timeout_s > 0.0)) throw ValidationError("external model timeout_s must be positive");
  } else {
    throw ValidationError("model type must be one of linear, table, external; got '" + m.type + "'");
  }
  return m;
}

nlohmann::json model_to_json(const ModelSpec& m) {
  nlohmann::json doc = {{"type", m.type}};
  if (m.type == "linear") {
    doc["intercept"] = m.intercept;
    doc["coefficients"] = m.coefficients;
  } else if (m.type == "table") {
    doc["outputs"] = m.outputs;
  } else {
    doc["command"] = m.command;
    doc["timeout_s"] = m.timeout_s;
    doc["batch_size"] = m.batch_size;
  }
  return doc;
}

}  // namespace

RunConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ValidationError("run config must be a JSON object");
  reject_unknown(doc,
                 {"graph", "data", "model", "instances", "distribution", "value_function", "variant", "symmetry",
                  "n_samples", "n_permutations", "seed", "decompose", "output", "format", "regularization",
                  "antithetic", "per_feature_confounded", "threads"},
                 "the run config");
  try {
    RunConfig c;
    c.graph = resolve(doc.value("graph", std::string()), base_dir);
    c.data = resolve(doc.at("data").get<std::string>(), base_dir);
    c.model = model_from_json(doc.at("model"));
    if (doc.contains("instances")) {
      const auto& inst = doc.at("instances");
      reject_unknown(inst, {"rows", "vectors"}, "'instances'");
      c.instance_rows = inst.value("rows", std::vector<std::size_t>{});
      c.instance_vectors = inst.value("vectors", nlohmann::json::array());
      if (!c.instance_vectors.is_array()) throw ValidationError("'instances.vectors' must be an array");
    }
    c.distribution = doc.value("distribution", c.distribution);
    if (c.distribution != "gaussian" && c.distribution != "discrete") {
      throw ValidationError("distribution must be gaussian or discrete; got '" + c.distribution + "'");
    }
    c.value_function = doc.value("value_function", c.value_function);
    if (c.value_function != "monte_carlo" && c.value_function != "exact") {
      throw ValidationError("value_function must be monte_carlo or exact; got '" + c.value_function + "'");
    }
    if (doc.contains("variant")) c.variant = parse_variant(doc.at("variant").get<std::string>());
    if (doc.contains("symmetry")) c.symmetry = parse_symmetry(doc.at("symmetry").get<std::string>());
    c.n_samples = doc.value("n_samples", c.n_samples);
    if (c.n_samples == 0) throw ValidationError("n_samples must be at least 1");
    if (doc.contains("n_permutations") && !doc.at("n_permutations").is_null()) {
      const auto& np = doc.at("n_permutations");
      if (np.is_string()) {
        if (np.get<std::string>() != "exact") throw ValidationError("n_permutations must be 'exact' or a positive integer");
        c.n_permutations = 0;
      } else {
        c.n_permutations = np.get<std::size_t>();
        if (*c.n_permutations == 0) throw ValidationError("n_permutations must be 'exact' or a positive integer");
      }
    }
    c.seed = doc.value("seed", c.seed);
    c.decompose = doc.value("decompose", c.decompose);
    c.output = resolve(doc.value("output", c.output), base_dir);
    c.format = doc.value("format", c.format);
    if (c.format == "structured-text") c.format = "json";
    if (c.format != "csv" && c.format != "json") throw ValidationError("format must be csv or json; got '" + c.format + "'");
    if (doc.contains("regularization") && !doc.at("regularization").is_null()) {
      c.regularization = doc.at("regularization").get<double>();
      if (!(*c.regularization >= 0.0)) throw ValidationError("regularization must be non-negative");
    }
    c.antithetic = doc.value("antithetic", c.antithetic);
    c.per_feature_confounded = doc.value("per_feature_confounded", c.per_feature_confounded);
    c.threads = doc.value("threads", c.threads);
    if (c.threads == 0) throw ValidationError("threads must be at least 1");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed run config: ") + e.what());
  }
}

nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json doc;
  if (!c.graph.empty()) doc["graph"] = c.graph;
  doc["data"] = c.data;
  doc["model"] = model_to_json(c.model);
  doc["instances"] = {{"rows", c.instance_rows}, {"vectors", c.instance_vectors}};
  doc["distribution"] = c.distribution;
  doc["value_function"] = c.value_function;
  doc["variant"] = to_string(c.variant);
  doc["symmetry"] = to_string(c.symmetry);
  doc["n_samples"] = c.n_samples;
  if (c.n_permutations) {
    if (*c.n_permutations == 0) {
      doc["n_permutations"] = "exact";
    } else {
      doc["n_permutations"] = *c.n_permutations;
    }
  }
  doc["seed"] = c.seed;
  doc["decompose"] = c.decompose;
  doc["output"] = c.output;
  doc["format"] = c.format;
  if (c.regularization) doc["regularization"] = *c.regularization;
  doc["antithetic"] = c.antithetic;
  doc["per_feature_confounded"] = c.per_feature_confounded;
  doc["threads"] = c.threads;
  return doc;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(doc, path.parent_path());
}

}  // namespace cshap::cli
