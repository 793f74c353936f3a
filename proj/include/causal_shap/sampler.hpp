#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "causal_shap/chain_graph.hpp"
#include "causal_shap/conditioning.hpp"
#include "causal_shap/data.hpp"
#include "causal_shap/gaussian_model.hpp"
#include "causal_shap/joint_table.hpp"
#include "causal_shap/rng.hpp"

namespace cshap {

// Fitted observational distribution P(X).
using DistributionModel = std::variant<GaussianModel, JointTable>;

const FeatureSpace& model_features(const DistributionModel& model);

struct SamplerOptions {
  // Pair each draw with its reflection (z -> -z, u -> 1-u).
  bool antithetic = false;
  // Draw each target of a confounded component from its own conditional
  // instead of jointly (literal reading of the sampling pseudocode; loses
  // within-component correlation of the drawn targets).
  bool per_feature_confounded = false;
};

// Draws full feature vectors with the coalition clamped and the remaining
// features from the distribution selected by the variant. Immutable after
// construction; all randomness comes from the caller's stream.
class CoalitionSampler {
 public:
  virtual ~CoalitionSampler() = default;

  std::size_t num_features() const { return coalition_.num_features(); }
  const Coalition& coalition() const { return coalition_; }

  void draw(RowMatrix& rows, RngStream& rng) const;
  std::vector<double> draw_one(RngStream& rng) const;

 protected:
  CoalitionSampler(Coalition coalition, std::size_t normals, std::size_t uniforms, bool antithetic)
      : coalition_(std::move(coalition)), normals_(normals), uniforms_(uniforms), antithetic_(antithetic) {}

  virtual void realize(std::span<const double> normals, std::span<const double> uniforms,
                       std::span<double> row) const = 0;

 private:
  Coalition coalition_;
  std::size_t normals_;
  std::size_t uniforms_;
  bool antithetic_;
};

// One sampling step: draw `targets` given earlier-drawn `sampled_cond` and
// coalition members `fixed_cond`.
struct StepSpec {
  std::vector<std::size_t> targets;
  std::vector<std::size_t> sampled_cond;
  std::vector<std::size_t> fixed_cond;
};

// Steps realizing the variant's distribution of the out-of-coalition features.
std::vector<StepSpec> sampling_steps(Variant variant, const ChainGraph* graph, const Coalition& coalition,
                                     const SamplerOptions& options = {});

// Sampler for P(X_out | do(x_in)) following an interventional factorization.
std::unique_ptr<CoalitionSampler> make_plan_sampler(const DistributionModel& model, const FactorPlan& plan,
                                                    const Coalition& coalition, const SamplerOptions& options = {});

// Sampler for the given variant. The empty coalition always uses the
// unconditional distribution; `graph` is required only for the causal variant.
std::unique_ptr<CoalitionSampler> make_sampler(const DistributionModel& model, Variant variant,
                                               const ChainGraph* graph, const Coalition& coalition,
                                               const SamplerOptions& options = {});

// One draw from P(X_out | do(x_in)) with x_in copied in.
std::vector<double> sample_interventional(const ChainGraph& graph, const DistributionModel& model,
                                          const FactorPlan& plan, const Coalition& coalition, RngStream& rng,
                                          const SamplerOptions& options = {});

}  // namespace cshap
