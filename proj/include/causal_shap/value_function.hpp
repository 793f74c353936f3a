#pragma once

#include <cstddef>
#include <cstdint>
#include <condition_variable>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "causal_shap/chain_graph.hpp"
#include "causal_shap/conditioning.hpp"
#include "causal_shap/predictor.hpp"
#include "causal_shap/sampler.hpp"

namespace cshap {

struct SamplerConfig {
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;
  bool antithetic = false;
  bool per_feature_confounded = false;
  // Rows per predictor call; 0 sends all samples of a coalition at once.
  std::size_t batch_size = 0;
};

struct ValueEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  bool exact = false;
};

// v(S) together with the mixed terms E[f(X_out, x_{S+i}) | do(x_S)] for the
// requested clamp features i: feature i is copied into the predictor input
// but the sampler still treats it as out of the coalition.
struct CoalitionValues {
  ValueEstimate value;
  std::vector<std::pair<std::size_t, ValueEstimate>> clamped;
};

// Feature copied into the predictor input without entering the coalition.
struct Clamp {
  std::size_t feature;
  double value;
};

// Monte Carlo estimate of v(S). The empty coalition uses the observational
// distribution for every variant and the full coalition returns f(x) exactly.
ValueEstimate estimate_value(const Coalition& coalition, Variant variant, const ChainGraph* graph,
                             const DistributionModel& model, const Predictor& predictor,
                             const SamplerConfig& config);

// Closed form for a linear predictor: expectations of a linear function only
// need the means propagated through the factorization.
ValueEstimate exact_value_linear(const Coalition& coalition, Variant variant, const ChainGraph* graph,
                                 const GaussianModel& model, const LinearModel& predictor,
                                 std::optional<Clamp> clamp = std::nullopt);

// Exact sum over the factorization materialized as conditional tables.
ValueEstimate exact_value_discrete(const Coalition& coalition, Variant variant, const ChainGraph* graph,
                                   const JointTable& table, const TableModel& predictor,
                                   std::optional<Clamp> clamp = std::nullopt);

// v(·) for one instance; evaluate() must be safe to call concurrently.
class ValueFunction {
 public:
  virtual ~ValueFunction() = default;
  virtual std::size_t num_features() const = 0;
  virtual Variant variant() const = 0;
  virtual bool exact() const = 0;
  virtual std::size_t n_samples() const { return 0; }
  virtual double prediction() const = 0;
  virtual CoalitionValues evaluate(FeatureMask coalition, FeatureMask clamp) const = 0;
};

class MonteCarloValueFunction final : public ValueFunction {
 public:
  // Keeps references to the model, graph and predictor.
  MonteCarloValueFunction(const DistributionModel& model, const ChainGraph* graph, const Predictor& predictor,
                          Variant variant, std::vector<double> instance, SamplerConfig config);

  std::size_t num_features() const override { return instance_.size(); }
  Variant variant() const override { return variant_; }
  bool exact() const override { return false; }
  std::size_t n_samples() const override { return config_.n_samples; }
  double prediction() const override { return fx_; }
  CoalitionValues evaluate(FeatureMask coalition, FeatureMask clamp) const override;

 private:
  const DistributionModel& model_;
  const ChainGraph* graph_;
  const Predictor& predictor_;
  Variant variant_;
  std::vector<double> instance_;
  SamplerConfig config_;
  double fx_;
};

class LinearValueFunction final : public ValueFunction {
 public:
  LinearValueFunction(const GaussianModel& model, const ChainGraph* graph, const LinearModel& predictor,
                      Variant variant, std::vector<double> instance);

  std::size_t num_features() const override { return instance_.size(); }
  Variant variant() const override { return variant_; }
  bool exact() const override { return true; }
  double prediction() const override { return fx_; }
  CoalitionValues evaluate(FeatureMask coalition, FeatureMask clamp) const override;

 private:
  const GaussianModel& model_;
  const ChainGraph* graph_;
  const LinearModel& predictor_;
  Variant variant_;
  std::vector<double> instance_;
  double fx_;
};

class DiscreteValueFunction final : public ValueFunction {
 public:
  DiscreteValueFunction(const JointTable& table, const ChainGraph* graph, const TableModel& predictor,
                        Variant variant, std::vector<double> instance);

  std::size_t num_features() const override { return instance_.size(); }
  Variant variant() const override { return variant_; }
  bool exact() const override { return true; }
  double prediction() const override { return fx_; }
  CoalitionValues evaluate(FeatureMask coalition, FeatureMask clamp) const override;

 private:
  const JointTable& table_;
  const ChainGraph* graph_;
  const TableModel& predictor_;
  Variant variant_;
  std::vector<double> instance_;
  double fx_;
};

// Memo table over coalitions: each (S, clamp feature) is evaluated at most
// once even when several threads ask for it.
class ValueMemo {
 public:
  explicit ValueMemo(const ValueFunction& fn) : fn_(fn) {}

  const ValueFunction& function() const { return fn_; }

  ValueEstimate value(FeatureMask coalition);
  // E[f(X_out, x_{S+i}) | do(x_S)]. Under the marginal variant the sampling
  // distribution of the other out-features does not depend on S, so this is
  // v(S+i) itself.
  ValueEstimate mixed(FeatureMask coalition, std::size_t feature);

  // Ensures v(S) and the mixed terms for `clamp` are present for every request.
  void prefetch(const std::vector<std::pair<FeatureMask, FeatureMask>>& requests, std::size_t threads = 1);

  // Number of evaluate() calls so far.
  std::size_t evaluations() const;

  // Snapshot of everything computed so far.
  std::map<FeatureMask, ValueEstimate> values() const;
  std::map<std::pair<FeatureMask, std::size_t>, ValueEstimate> mixed_values() const;

 private:
  void ensure(FeatureMask coalition, FeatureMask clamp);

  const ValueFunction& fn_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<FeatureMask, ValueEstimate> values_;
  std::map<std::pair<FeatureMask, std::size_t>, ValueEstimate> mixed_;
  std::map<FeatureMask, FeatureMask> mixed_done_;
  std::set<FeatureMask> in_flight_;
  std::size_t evaluations_ = 0;
};

// Mean and standard error of per-sample outputs; antithetic pairs are
// averaged first so the error reflects the paired design.
ValueEstimate summarize_samples(std::span<const double> outputs, bool antithetic);

}  // namespace cshap
