#include "causal_shap/cli/run.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "causal_shap/analytic.hpp"
#include "causal_shap/chain_graph.hpp"
#include "causal_shap/cli/external_predictor.hpp"
#include "causal_shap/data.hpp"
#include "causal_shap/errors.hpp"
#include "causal_shap/gaussian_model.hpp"
#include "causal_shap/joint_table.hpp"
#include "causal_shap/predictor.hpp"
#include "causal_shap/sampler.hpp"
#include "causal_shap/value_function.hpp"

namespace cshap::cli {

namespace fs = std::filesystem;

void AtomicFileSet::add(fs::path target, std::string content) {
  files_.emplace_back(std::move(target), std::move(content));
}

void AtomicFileSet::commit() {
  std::vector<fs::path> temps;
  auto cleanup = [&] {
    std::error_code ec;
    for (const auto& t : temps) fs::remove(t, ec);
  };
  try {
    for (const auto& [target, content] : files_) {
      if (target.has_parent_path()) fs::create_directories(target.parent_path());
      fs::path tmp = target;
      tmp += ".tmp";
      temps.push_back(tmp);
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << content;
      out.close();
      if (!out) throw ValidationError("cannot write " + tmp.string());
    }
    for (std::size_t k = 0; k < files_.size(); ++k) fs::rename(temps[k], files_[k].first);
  } catch (const fs::filesystem_error& e) {
    cleanup();
    throw ValidationError(std::string("cannot write output: ") + e.what());
  } catch (...) {
    cleanup();
    throw;
  }
  files_.clear();
}

namespace {

std::vector<std::string> read_header(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open data file " + path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("data file " + path + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return split_csv_line(line);
}

FeatureSpace resolve_features(const std::optional<ChainGraph>& graph, const std::string& data_path,
                              const std::string& distribution) {
  if (graph) return graph->features();
  if (distribution == "discrete") {
    throw ValidationError("the discrete distribution needs a graph file declaring the feature levels");
  }
  return FeatureSpace::continuous(read_header(data_path));
}

std::vector<double> instance_from_json(const nlohmann::json& v, const FeatureSpace& features, std::size_t k) {
  const std::string where = "instance vector " + std::to_string(k);
  if (!v.is_array()) throw ValidationError(where + " must be an array");
  if (v.size() != features.size()) {
    throw ValidationError(where + " has " + std::to_string(v.size()) + " entries, expected " +
                          std::to_string(features.size()));
  }
  std::vector<double> x(features.size());
  for (std::size_t f = 0; f < features.size(); ++f) {
    const auto& e = v[f];
    if (features.is_categorical(f)) {
      const auto& levels = features[f].levels;
      if (e.is_string()) {
        const auto it = std::find(levels.begin(), levels.end(), e.get<std::string>());
        if (it == levels.end()) {
          throw ValidationError(where + ": '" + e.get<std::string>() + "' is not a level of " + features[f].name);
        }
        x[f] = static_cast<double>(it - levels.begin());
      } else if (e.is_number_integer() && e.get<long long>() >= 0 &&
                 static_cast<std::size_t>(e.get<long long>()) < levels.size()) {
        x[f] = static_cast<double>(e.get<long long>());
      } else {
        throw ValidationError(where + ": invalid level for " + features[f].name);
      }
    } else {
      if (!e.is_number()) throw ValidationError(where + ": " + features[f].name + " must be numeric");
      x[f] = e.get<double>();
      if (!std::isfinite(x[f])) throw ValidationError(where + ": " + features[f].name + " is not finite");
    }
  }
  return x;
}

std::unique_ptr<Predictor> make_predictor(const ModelSpec& spec, const FeatureSpace& features) {
  const auto n = features.size();
  if (spec.type == "linear") {
    if (spec.coefficients.size() != n) {
      throw ValidationError("linear model has " + std::to_string(spec.coefficients.size()) +
                            " coefficients for " + std::to_string(n) + " features");
    }
    return std::make_unique<LinearModel>(
        spec.intercept, Eigen::Map<const Eigen::VectorXd>(spec.coefficients.data(), static_cast<Eigen::Index>(n)));
  }
  if (spec.type == "table") {
    auto index = AssignmentIndex::of(features);
    if (spec.outputs.size() != index.size()) {
      throw ValidationError("table model has " + std::to_string(spec.outputs.size()) + " outputs, expected " +
                            std::to_string(index.size()));
    }
    return std::make_unique<TableModel>(std::move(index), spec.outputs);
  }
  return std::make_unique<ExternalPredictor>(spec.command, n, spec.timeout_s, spec.batch_size);
}

std::string sina_csv(const RunOutput& run) {
  const auto& features = run.features;
  std::ostringstream out;
  out << "instance,feature,feature_value,phi\n";
  for (std::size_t k = 0; k < run.reports.size(); ++k) {
    for (std::size_t f = 0; f < features.size(); ++f) {
      const double v = run.instances[k][f];
      const std::string value = features.is_categorical(f)
                                    ? csv_field(features[f].levels.at(static_cast<std::size_t>(v)))
                                    : format_double(v);
      out << k << ',' << csv_field(features[f].name) << ',' << value << ','
          << format_double(run.reports[k].features[f].phi) << '\n';
    }
  }
  return out.str();
}

}  // namespace

RunOutput compute_reports(const RunConfig& config) {
  std::optional<ChainGraph> graph;
  if (!config.graph.empty()) graph = load_graph(config.graph);
  const FeatureSpace features = resolve_features(graph, config.data, config.distribution);
  const auto n = features.size();
  if (n == 0) throw ValidationError("no features");

  const DataMatrix data = read_csv(config.data, features);
  if (data.num_rows() == 0) throw ValidationError("data file " + config.data + " has no rows");
  const DistributionModel model = config.distribution == "gaussian"
                                      ? DistributionModel(fit_gaussian(data, config.regularization))
                                      : DistributionModel(JointTable::fit(data));

  const bool needs_graph = config.variant == Variant::causal || config.symmetry == Symmetry::asymmetric;
  if (needs_graph && !graph) {
    throw ValidationError("a graph file is required for the causal variant and for asymmetric values");
  }
  const ChainGraph* g = graph ? &*graph : nullptr;

  RunOutput run;
  run.features = features;
  for (const auto r : config.instance_rows) {
    if (r >= data.num_rows()) {
      throw ValidationError("instance row " + std::to_string(r) + " is out of range (" +
                            std::to_string(data.num_rows()) + " rows)");
    }
    const auto row = data.rows.row(static_cast<Eigen::Index>(r));
    run.instances.emplace_back(row.data(), row.data() + n);
  }
  for (std::size_t k = 0; k < config.instance_vectors.size(); ++k) {
    run.instances.push_back(instance_from_json(config.instance_vectors[k], features, k));
  }
  if (run.instances.empty()) throw ValidationError("no instances to explain");

  const auto predictor = make_predictor(config.model, features);

  PermutationDistribution dist;
  const auto np = config.n_permutations.value_or(n <= kDefaultEnumerationCap ? 0 : kDefaultSampledPermutations);
  if (np == 0) {
    if (n > kMaxEnumerationCap) {
      throw ValidationError("exact enumeration supports at most " + std::to_string(kMaxEnumerationCap) +
                            " features; set n_permutations");
    }
    dist = PermutationDistribution::exact(config.symmetry, g);
    dist.enumeration_cap = kMaxEnumerationCap;
  } else {
    dist = PermutationDistribution::sampled(config.symmetry, np, config.seed, g);
  }

  SamplerConfig sampler;
  sampler.n_samples = config.n_samples;
  sampler.seed = config.seed;
  sampler.antithetic = config.antithetic;
  sampler.per_feature_confounded = config.per_feature_confounded;

  ShapleyOptions options;
  options.decompose = config.decompose;
  options.threads = config.threads;

  const auto names = features.names();
  for (const auto& x : run.instances) {
    std::unique_ptr<ValueFunction> fn;
    if (config.value_function == "monte_carlo") {
      fn = std::make_unique<MonteCarloValueFunction>(model, g, *predictor, config.variant, x, sampler);
    } else if (const auto* gm = std::get_if<GaussianModel>(&model); gm && config.model.type == "linear") {
      fn = std::make_unique<LinearValueFunction>(*gm, g, static_cast<const LinearModel&>(*predictor),
                                                 config.variant, x);
    } else if (const auto* jt = std::get_if<JointTable>(&model); jt && config.model.type == "table") {
      fn = std::make_unique<DiscreteValueFunction>(*jt, g, static_cast<const TableModel&>(*predictor),
                                                   config.variant, x);
    } else {
      throw ValidationError(
          "the exact value function needs a gaussian distribution with a linear model or a discrete "
          "distribution with a table model");
    }
    run.reports.push_back(shapley_values(*fn, dist, names, options));
  }
  return run;
}

RunOutput run_explain(const RunConfig& config) {
  RunOutput run = compute_reports(config);

  const fs::path dir(config.output);
  AtomicFileSet files;
  for (std::size_t k = 0; k < run.reports.size(); ++k) {
    const auto stem = "report_" + std::to_string(k);
    files.add(dir / (stem + ".csv"), report_to_csv(run.reports[k]));
    files.add(dir / (stem + ".json"), report_to_json(run.reports[k]).dump(2) + "\n");
    run.files.push_back(dir / (stem + ".csv"));
    run.files.push_back(dir / (stem + ".json"));
  }
  files.add(dir / "sina.csv", sina_csv(run));
  run.files.push_back(dir / "sina.csv");
  files.commit();
  return run;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const PredictorError*>(&e)) return 3;
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const UnsupportedError*>(&e) ||
      dynamic_cast<const NumericalError*>(&e) || dynamic_cast<const ZeroProbabilityError*>(&e) ||
      dynamic_cast<const nlohmann::json::exception*>(&e)) {
    return 2;
  }
  return 1;
}

namespace {

struct ExplainFlags {
  std::string config;
  std::optional<std::string> variant, symmetry, n_permutations, output, format;
  std::optional<std::size_t> n_samples, threads;
  std::optional<std::uint64_t> seed;
  bool decompose = false;
};

void add_explain_flags(CLI::App* cmd, ExplainFlags& f, bool with_decompose) {
  cmd->add_option("--config", f.config, "Run configuration (JSON)")->required();
  cmd->add_option("--variant", f.variant, "marginal, conditional or causal")
      ->check(CLI::IsMember({"marginal", "conditional", "causal"}));
  cmd->add_option("--symmetry", f.symmetry, "symmetric or asymmetric")
      ->check(CLI::IsMember({"symmetric", "asymmetric"}));
  cmd->add_option("--n-samples", f.n_samples, "Monte Carlo samples per coalition")->check(CLI::PositiveNumber);
  cmd->add_option("--n-permutations", f.n_permutations, "'exact' or the number of sampled permutations");
  cmd->add_option("--seed", f.seed, "Random seed");
  cmd->add_option("--output", f.output, "Output directory");
  cmd->add_option("--format", f.format, "Summary printed on stdout: csv or structured-text")
      ->check(CLI::IsMember({"csv", "json", "structured-text"}));
  cmd->add_option("--threads", f.threads, "Worker threads for coalition evaluation")->check(CLI::PositiveNumber);
  if (with_decompose) cmd->add_flag("--decompose", f.decompose, "Add direct and indirect effect columns");
}

RunConfig apply_flags(const ExplainFlags& f, bool decompose) {
  RunConfig c = load_config(f.config);
  if (f.variant) c.variant = parse_variant(*f.variant);
  if (f.symmetry) c.symmetry = parse_symmetry(*f.symmetry);
  if (f.n_samples) c.n_samples = *f.n_samples;
  if (f.n_permutations) {
    if (*f.n_permutations == "exact") {
      c.n_permutations = 0;
    } else {
      std::size_t pos = 0;
      unsigned long long k = 0;
      try {
        k = std::stoull(*f.n_permutations, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != f.n_permutations->size() || k == 0) {
        throw ValidationError("--n-permutations: expected 'exact' or a positive integer, got '" +
                              *f.n_permutations + "'");
      }
      c.n_permutations = k;
    }
  }
  if (f.seed) c.seed = *f.seed;
  if (f.output) c.output = *f.output;
  if (f.format) c.format = *f.format == "structured-text" ? "json" : *f.format;
  if (f.threads) c.threads = *f.threads;
  if (decompose || f.decompose) c.decompose = true;
  return c;
}

void print_summary(const RunConfig& c, const RunOutput& run, std::ostream& out) {
  if (c.format == "json") {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& r : run.reports) doc.push_back(report_to_json(r));
    out << doc.dump(2) << '\n';
  } else {
    for (std::size_t k = 0; k < run.reports.size(); ++k) {
      if (k > 0) out << '\n';
      out << "# instance," << k << '\n' << report_to_csv(run.reports[k]);
    }
  }
}

struct ToyFlags {
  double from = 0.0, to = 0.9;
  std::size_t steps = 10;
  double beta1 = 0.0, beta2 = 2.0, x1 = 1.0, x2 = 1.5, xbar1 = 0.0, xbar2 = 0.0;
};

std::vector<double> grid(double from, double to, std::size_t steps) {
  if (steps == 0) throw ValidationError("--steps must be at least 1");
  std::vector<double> g;
  for (std::size_t k = 0; k < steps; ++k) {
    g.push_back(steps == 1 ? from : from + (to - from) * static_cast<double>(k) / static_cast<double>(steps - 1));
  }
  return g;
}

void run_toy(const ToyFlags& f, std::ostream& out) {
  out << "alpha,structure,variant,symmetry,feature,direct,indirect,total\n";
  for (const double a : grid(f.from, f.to, f.steps)) {
    const auto params = ToyParams::standardized(a, f.beta1, f.beta2, f.x1, f.x2, f.xbar1, f.xbar2);
    for (const auto s : {ToyStructure::chain, ToyStructure::fork, ToyStructure::confounder, ToyStructure::cycle}) {
      for (const auto v : {Variant::marginal, Variant::conditional, Variant::causal}) {
        for (const auto sym : {Symmetry::symmetric, Symmetry::asymmetric}) {
          const auto phi = toy_shapley(s, v, sym, params);
          for (std::size_t i = 0; i < 2; ++i) {
            out << format_double(a) << ',' << to_string(s) << ',' << to_string(v) << ',' << to_string(sym) << ",x"
                << i + 1 << ',' << format_double(phi[i].direct) << ',' << format_double(phi[i].indirect) << ','
                << format_double(phi[i].total) << '\n';
          }
        }
      }
    }
  }
}

struct XorFlags {
  double from = 0.0, to = 0.9;
  std::size_t steps = 10;
  int x1 = 0, x2 = 0;
};

void run_xor(const XorFlags& f, std::ostream& out) {
  out << "epsilon,structure,variant,symmetry,phi1,phi2\n";
  for (const double eps : grid(f.from, f.to, f.steps)) {
    for (const auto s : {XorStructure::none, XorStructure::chain12, XorStructure::chain21, XorStructure::confounder,
                         XorStructure::mutual}) {
      for (const auto v : {Variant::marginal, Variant::conditional, Variant::causal}) {
        if (v == Variant::causal && s == XorStructure::none) continue;
        for (const auto sym : {Symmetry::symmetric, Symmetry::asymmetric}) {
          const auto phi = xor_shapley(XorSpec{eps, s, f.x1, f.x2}, v, sym);
          out << format_double(eps) << ',' << to_string(s) << ',' << to_string(v) << ',' << to_string(sym) << ','
              << format_double(phi[0]) << ',' << format_double(phi[1]) << '\n';
        }
      }
    }
  }
}

struct FitFlags {
  std::string data, graph, distribution = "gaussian", output;
  std::optional<double> regularization;
};

void run_fit(const FitFlags& f, std::ostream& out) {
  std::optional<ChainGraph> graph;
  if (!f.graph.empty()) graph = load_graph(f.graph);
  const auto features = resolve_features(graph, f.data, f.distribution);
  const auto data = read_csv(f.data, features);
  nlohmann::json doc = {{"distribution", f.distribution}};
  doc["model"] = f.distribution == "gaussian" ? gaussian_to_json(fit_gaussian(data, f.regularization))
                                              : joint_table_to_json(JointTable::fit(data));
  const auto text = doc.dump(2) + "\n";
  if (f.output.empty()) {
    out << text;
  } else {
    AtomicFileSet files;
    files.add(f.output, text);
    files.commit();
  }
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Causal Shapley value attributions"};
  app.name("causal-shap");
  app.require_subcommand(1);

  ExplainFlags explain_flags, decompose_flags;
  auto* explain = app.add_subcommand("explain", "Attribute predictions to features");
  add_explain_flags(explain, explain_flags, true);
  auto* decompose = app.add_subcommand("decompose", "Attributions split into direct and indirect effects");
  add_explain_flags(decompose, decompose_flags, false);

  ToyFlags toy_flags;
  auto* toy = app.add_subcommand("toy", "Closed-form two-feature attributions swept over alpha (CSV)");
  toy->add_option("--alpha-from", toy_flags.from);
  toy->add_option("--alpha-to", toy_flags.to);
  toy->add_option("--steps", toy_flags.steps);
  toy->add_option("--beta1", toy_flags.beta1);
  toy->add_option("--beta2", toy_flags.beta2);
  toy->add_option("--x1", toy_flags.x1);
  toy->add_option("--x2", toy_flags.x2);
  toy->add_option("--xbar1", toy_flags.xbar1);
  toy->add_option("--xbar2", toy_flags.xbar2);

  XorFlags xor_flags;
  auto* xr = app.add_subcommand("xor", "XOR attributions swept over epsilon (CSV)");
  xr->add_option("--eps-from", xor_flags.from);
  xr->add_option("--eps-to", xor_flags.to);
  xr->add_option("--steps", xor_flags.steps);
  xr->add_option("--x1", xor_flags.x1)->check(CLI::Range(0, 1));
  xr->add_option("--x2", xor_flags.x2)->check(CLI::Range(0, 1));

  FitFlags fit_flags;
  auto* fit = app.add_subcommand("fit", "Fit the distribution model and export it as JSON");
  fit->add_option("--data", fit_flags.data, "CSV data")->required();
  fit->add_option("--graph", fit_flags.graph, "Graph file (needed for categorical features)");
  fit->add_option("--distribution", fit_flags.distribution)->check(CLI::IsMember({"gaussian", "discrete"}));
  fit->add_option("--regularization", fit_flags.regularization)->check(CLI::NonNegativeNumber);
  fit->add_option("--output", fit_flags.output, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (explain->parsed() || decompose->parsed()) {
      const bool is_decompose = decompose->parsed();
      const auto config = apply_flags(is_decompose ? decompose_flags : explain_flags, is_decompose);
      const auto run = run_explain(config);
      print_summary(config, run, out);
      for (const auto& p : run.files) err << "wrote " << p.string() << '\n';
    } else if (toy->parsed()) {
      run_toy(toy_flags, out);
    } else if (xr->parsed()) {
      run_xor(xor_flags, out);
    } else if (fit->parsed()) {
      run_fit(fit_flags, out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 0;
}

}  // namespace cshap::cli
