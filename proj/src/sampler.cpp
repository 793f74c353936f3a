#include "causal_shap/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "causal_shap/errors.hpp"

namespace cshap {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::marginal: return "marginal";
    case Variant::conditional: return "conditional";
    case Variant::causal: return "causal";
  }
  return "unknown";
}

Variant parse_variant(std::string_view text) {
  if (text == "marginal") return Variant::marginal;
  if (text == "conditional") return Variant::conditional;
  if (text == "causal") return Variant::causal;
  throw ValidationError("variant must be one of marginal, conditional, causal; got '" + std::string(text) + "'");
}

const FeatureSpace& model_features(const DistributionModel& model) {
  return std::visit([](const auto& m) -> const FeatureSpace& { return m.features(); }, model);
}

void CoalitionSampler::draw(RowMatrix& rows, RngStream& rng) const {
  const auto n = num_features();
  if (static_cast<std::size_t>(rows.cols()) != n) rows.resize(rows.rows(), static_cast<Eigen::Index>(n));
  std::vector<double> normals(normals_), uniforms(uniforms_);
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    if (antithetic_ && (r % 2) == 1) {
      for (auto& z : normals) z = -z;
      for (auto& u : uniforms) u = 1.0 - u;
    } else {
      for (auto& z : normals) z = rng.normal();
      for (auto& u : uniforms) u = rng.uniform();
    }
    std::span<double> row(rows.row(r).data(), n);
    coalition_.fill(row);
    realize(normals, uniforms, row);
  }
}

std::vector<double> CoalitionSampler::draw_one(RngStream& rng) const {
  RowMatrix rows(1, static_cast<Eigen::Index>(num_features()));
  draw(rows, rng);
  return std::vector<double>(rows.data(), rows.data() + rows.size());
}

namespace {

std::vector<StepSpec> steps_from_plan(const FactorPlan& plan, const SamplerOptions& options) {
  std::vector<StepSpec> steps;
  for (const auto& f : plan.factors) {
    if (f.targets.empty()) continue;
    if (f.confounded && options.per_feature_confounded) {
      for (auto t : f.targets) steps.push_back({{t}, f.sampled_parents, f.fixed_conditioning()});
    } else {
      steps.push_back({f.targets, f.sampled_parents, f.fixed_conditioning()});
    }
  }
  return steps;
}

}  // namespace

std::vector<StepSpec> sampling_steps(Variant variant, const ChainGraph* graph, const Coalition& coalition,
                                     const SamplerOptions& options) {
  const auto out = mask_members(coalition.complement());
  if (out.empty()) return {};
  if (coalition.members() == 0) return {StepSpec{out, {}, {}}};
  switch (variant) {
    case Variant::marginal: return {StepSpec{out, {}, {}}};
    case Variant::conditional: return {StepSpec{out, {}, mask_members(coalition.members())}};
    case Variant::causal:
      if (graph == nullptr) throw ValidationError("the causal variant needs a chain graph");
      if (graph->num_features() != coalition.num_features()) {
        throw ValidationError("chain graph and instance disagree on the number of features");
      }
      return steps_from_plan(intervention_factorization(*graph, coalition), options);
  }
  return {};
}

namespace {

std::vector<std::size_t> merged(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::vector<std::size_t> out = a;
  out.insert(out.end(), b.begin(), b.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t inverse_cdf(std::span<const double> cumulative, double u) {
  const double total = cumulative.back();
  const double target = u * total;
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  if (it == cumulative.end()) {
    // u == 1 after reflection: take the last level with positive mass.
    std::size_t k = cumulative.size() - 1;
    while (k > 0 && cumulative[k] == cumulative[k - 1]) --k;
    return k;
  }
  return static_cast<std::size_t>(it - cumulative.begin());
}

// ------------------------------------------------------------------ Gaussian

struct GaussianStep {
  std::vector<std::size_t> continuous;
  std::vector<std::size_t> categorical;
  std::vector<std::size_t> conditioning;
  std::optional<GaussianConditioner> conditioner;
  std::vector<std::vector<double>> level_cdf;  // per categorical target
};

class GaussianSampler final : public CoalitionSampler {
 public:
  GaussianSampler(const GaussianModel& model, const Coalition& coalition, std::vector<GaussianStep> steps,
                  std::size_t normals, std::size_t uniforms, bool antithetic)
      : CoalitionSampler(coalition, normals, uniforms, antithetic), steps_(std::move(steps)) {
    (void)model;
  }

 protected:
  void realize(std::span<const double> normals, std::span<const double> uniforms,
               std::span<double> row) const override {
    std::size_t zn = 0, un = 0;
    for (const auto& s : steps_) {
      if (s.conditioner) {
        Eigen::VectorXd given(static_cast<Eigen::Index>(s.conditioning.size()));
        for (std::size_t k = 0; k < s.conditioning.size(); ++k) given(k) = row[s.conditioning[k]];
        const auto m = static_cast<Eigen::Index>(s.continuous.size());
        Eigen::Map<const Eigen::VectorXd> z(normals.data() + zn, m);
        const Eigen::VectorXd draw = s.conditioner->conditional_mean(given) + s.conditioner->cholesky_factor() * z;
        for (Eigen::Index k = 0; k < m; ++k) row[s.continuous[k]] = draw(k);
        zn += s.continuous.size();
      }
      for (std::size_t k = 0; k < s.categorical.size(); ++k) {
        row[s.categorical[k]] = static_cast<double>(inverse_cdf(s.level_cdf[k], uniforms[un++]));
      }
    }
  }

 private:
  std::vector<GaussianStep> steps_;
};

std::unique_ptr<CoalitionSampler> gaussian_sampler(const GaussianModel& model, const Coalition& coalition,
                                                   const std::vector<StepSpec>& specs, bool antithetic) {
  const auto& fs = model.features();
  std::vector<GaussianStep> steps;
  std::size_t normals = 0, uniforms = 0;
  for (const auto& spec : specs) {
    GaussianStep s;
    s.conditioning = merged(spec.sampled_cond, spec.fixed_cond);
    for (auto t : spec.targets) (fs.is_categorical(t) ? s.categorical : s.continuous).push_back(t);
    if (!s.categorical.empty() && !s.conditioning.empty()) {
      throw UnsupportedError("categorical feature '" + fs[s.categorical.front()].name +
                             "' would need Gaussian conditioning; only unconditioned categorical draws are supported");
    }
    if (!s.continuous.empty()) s.conditioner.emplace(model, s.continuous, s.conditioning);
    for (auto c : s.categorical) {
      std::vector<double> cdf;
      double acc = 0.0;
      for (double p : model.level_frequencies(c)) cdf.push_back(acc += p);
      s.level_cdf.push_back(std::move(cdf));
    }
    normals += s.continuous.size();
    uniforms += s.categorical.size();
    steps.push_back(std::move(s));
  }
  return std::make_unique<GaussianSampler>(model, coalition, std::move(steps), normals, uniforms, antithetic);
}

// ------------------------------------------------------------------ discrete

struct DiscreteStep {
  std::vector<std::size_t> targets;
  std::vector<std::size_t> sampled_cond;
  AssignmentIndex target_index;
  AssignmentIndex cond_index;
  std::vector<std::vector<double>> cdf;  // per conditioning assignment; back() is the mass
};

class DiscreteSampler final : public CoalitionSampler {
 public:
  DiscreteSampler(const Coalition& coalition, std::vector<DiscreteStep> steps, bool antithetic)
      : CoalitionSampler(coalition, 0, steps.size(), antithetic), steps_(std::move(steps)) {}

 protected:
  void realize(std::span<const double>, std::span<const double> uniforms, std::span<double> row) const override {
    for (std::size_t k = 0; k < steps_.size(); ++k) {
      const auto& s = steps_[k];
      std::size_t c = 0;
      for (std::size_t j = 0; j < s.sampled_cond.size(); ++j) {
        c += static_cast<std::size_t>(row[s.sampled_cond[j]]) * s.cond_index.stride(j);
      }
      const auto& cdf = s.cdf[c];
      if (!(cdf.back() > 0.0)) {
        throw ZeroProbabilityError("sampling reached a conditioning event of probability zero");
      }
      const auto t = inverse_cdf(cdf, uniforms[k]);
      for (std::size_t j = 0; j < s.targets.size(); ++j) {
        row[s.targets[j]] = static_cast<double>(s.target_index.level(t, j));
      }
    }
  }

 private:
  std::vector<DiscreteStep> steps_;
};

std::unique_ptr<CoalitionSampler> discrete_sampler(const JointTable& table, const Coalition& coalition,
                                                   const std::vector<StepSpec>& specs, bool antithetic) {
  std::vector<DiscreteStep> steps;
  for (const auto& spec : specs) {
    std::vector<std::size_t> fixed_level;
    for (auto f : spec.fixed_cond) fixed_level.push_back(static_cast<std::size_t>(coalition.value(f)));
    auto ct = conditional_table(table, spec.targets, spec.sampled_cond, spec.fixed_cond, fixed_level);
    double total = 0.0;
    for (auto& row : ct.mass) {
      double acc = 0.0;
      for (auto& v : row) v = (acc += v);
      total += acc;
    }
    if (!(total > 0.0)) {
      throw ZeroProbabilityError("the coalition values have probability zero under the joint table");
    }
    steps.push_back(DiscreteStep{spec.targets, spec.sampled_cond, std::move(ct.target_index),
                                 std::move(ct.cond_index), std::move(ct.mass)});
  }
  return std::make_unique<DiscreteSampler>(coalition, std::move(steps), antithetic);
}

std::unique_ptr<CoalitionSampler> sampler_from_specs(const DistributionModel& model, const Coalition& coalition,
                                                     const std::vector<StepSpec>& specs, bool antithetic) {
  if (model_features(model).size() != coalition.num_features()) {
    throw ValidationError("distribution model and instance disagree on the number of features");
  }
  if (const auto* g = std::get_if<GaussianModel>(&model)) return gaussian_sampler(*g, coalition, specs, antithetic);
  return discrete_sampler(std::get<JointTable>(model), coalition, specs, antithetic);
}

}  // namespace

std::unique_ptr<CoalitionSampler> make_plan_sampler(const DistributionModel& model, const FactorPlan& plan,
                                                    const Coalition& coalition, const SamplerOptions& options) {
  if (plan.coalition != coalition.members()) throw ValidationError("factor plan was built for another coalition");
  return sampler_from_specs(model, coalition, steps_from_plan(plan, options), options.antithetic);
}

std::unique_ptr<CoalitionSampler> make_sampler(const DistributionModel& model, Variant variant,
                                               const ChainGraph* graph, const Coalition& coalition,
                                               const SamplerOptions& options) {
  return sampler_from_specs(model, coalition, sampling_steps(variant, graph, coalition, options),
                            options.antithetic);
}

std::vector<double> sample_interventional(const ChainGraph& graph, const DistributionModel& model,
                                          const FactorPlan& plan, const Coalition& coalition, RngStream& rng,
                                          const SamplerOptions& options) {
  if (graph.num_features() != coalition.num_features()) {
    throw ValidationError("chain graph and instance disagree on the number of features");
  }
  return make_plan_sampler(model, plan, coalition, options)->draw_one(rng);
}

}  // namespace cshap
