#include "causal_shap/value_function.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <thread>

#include "causal_shap/errors.hpp"

namespace cshap {

ValueEstimate summarize_samples(std::span<const double> y, bool antithetic) {
  if (y.empty()) throw ValidationError("no samples to average");
  ValueEstimate est;
  est.n_samples = y.size();
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  if (*lo == *hi) {
    est.value = *lo;
    return est;
  }
  double sum = 0.0;
  for (double v : y) sum += v;
  est.value = sum / static_cast<double>(y.size());

  std::vector<double> units;
  if (antithetic) {
    for (std::size_t k = 0; k + 1 < y.size(); k += 2) units.push_back(0.5 * (y[k] + y[k + 1]));
    if (y.size() % 2 == 1) units.push_back(y.back());
  } else {
    units.assign(y.begin(), y.end());
  }
  if (units.size() < 2) return est;
  double mean = 0.0;
  for (double u : units) mean += u;
  mean /= static_cast<double>(units.size());
  double ss = 0.0;
  for (double u : units) ss += (u - mean) * (u - mean);
  const double var = ss / static_cast<double>(units.size() - 1);
  est.std_error = std::sqrt(var / static_cast<double>(units.size()));
  return est;
}

namespace {

void check_widths(std::size_t model_n, std::size_t predictor_n, std::size_t instance_n, const ChainGraph* graph) {
  if (model_n != instance_n) {
    throw ValidationError("instance has " + std::to_string(instance_n) + " values for " + std::to_string(model_n) +
                          " features");
  }
  if (predictor_n != instance_n) {
    throw ValidationError("predictor expects " + std::to_string(predictor_n) + " features, the model has " +
                          std::to_string(model_n));
  }
  if (graph != nullptr && graph->num_features() != instance_n) {
    throw ValidationError("chain graph has " + std::to_string(graph->num_features()) + " features, the model has " +
                          std::to_string(model_n));
  }
}

std::vector<double> predict_batched(const Predictor& predictor, const RowMatrix& rows, std::size_t batch_size) {
  const auto m = static_cast<std::size_t>(rows.rows());
  const std::size_t step = batch_size == 0 ? m : batch_size;
  std::vector<double> out;
  out.reserve(m);
  for (std::size_t start = 0; start < m; start += step) {
    const auto len = std::min(step, m - start);
    std::vector<double> y;
    if (start == 0 && len == m) {
      y = predictor.predict(rows);
    } else {
      RowMatrix chunk = rows.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len));
      y = predictor.predict(chunk);
    }
    if (y.size() != len) {
      throw PredictorError("predictor returned " + std::to_string(y.size()) + " values for " + std::to_string(len) +
                               " rows",
                           "");
    }
    for (double v : y) {
      if (!std::isfinite(v)) throw PredictorError("predictor returned a non-finite value", format_double(v));
    }
    out.insert(out.end(), y.begin(), y.end());
  }
  return out;
}

ValueEstimate exact_estimate(double v) { return ValueEstimate{v, 0.0, 0, true}; }

CoalitionValues monte_carlo(const DistributionModel& model, const ChainGraph* graph, const Predictor& predictor,
                            Variant variant, const Coalition& coalition, std::span<const double> instance,
                            FeatureMask clamp,
                            const SamplerConfig& config, double fx) {
  const auto n = coalition.num_features();
  const FeatureMask full = full_mask(n);
  const FeatureMask s = coalition.members();
  if ((clamp & s) != 0 || (clamp & ~full) != 0) throw ValidationError("clamp features must lie outside the coalition");
  CoalitionValues out;
  if (s == full) {
    out.value = exact_estimate(fx);
    return out;
  }
  if (config.n_samples == 0) throw ValidationError("n_samples must be at least 1");

  SamplerOptions options{config.antithetic, config.per_feature_confounded};
  const auto sampler = make_sampler(model, variant, graph, coalition, options);
  RngStream rng(config.seed, stream_label({static_cast<std::uint64_t>(StreamDomain::coalition_values), s}));
  RowMatrix rows(static_cast<Eigen::Index>(config.n_samples), static_cast<Eigen::Index>(n));
  sampler->draw(rows, rng);

  const auto y = predict_batched(predictor, rows, config.batch_size);
  out.value = summarize_samples(y, config.antithetic);

  for (auto i : mask_members(clamp)) {
    if ((s | feature_bit(i)) == full) {
      out.clamped.emplace_back(i, exact_estimate(fx));
      continue;
    }
    RowMatrix clamped = rows;
    clamped.col(static_cast<Eigen::Index>(i)).setConstant(instance[i]);
    const auto yc = predict_batched(predictor, clamped, config.batch_size);
    out.clamped.emplace_back(i, summarize_samples(yc, config.antithetic));
  }
  return out;
}

// Expected feature vector under the variant's distribution with the
// coalition held fixed.
std::vector<double> propagated_means(const GaussianModel& model, const std::vector<StepSpec>& steps,
                                     const Coalition& coalition) {
  const auto& fs = model.features();
  std::vector<double> m(coalition.num_features(), 0.0);
  coalition.fill(m);
  for (const auto& step : steps) {
    std::vector<std::size_t> cond = step.sampled_cond;
    cond.insert(cond.end(), step.fixed_cond.begin(), step.fixed_cond.end());
    std::sort(cond.begin(), cond.end());
    std::vector<std::size_t> continuous;
    for (auto t : step.targets) {
      if (!fs.is_categorical(t)) {
        continuous.push_back(t);
      } else if (!cond.empty()) {
        throw UnsupportedError("categorical feature '" + fs[t].name +
                               "' would need Gaussian conditioning; only unconditioned categorical draws are supported");
      } else {
        m[t] = model.mean()(static_cast<Eigen::Index>(t));
      }
    }
    if (continuous.empty()) continue;
    GaussianConditioner conditioner(model, continuous, cond);
    Eigen::VectorXd given(static_cast<Eigen::Index>(cond.size()));
    for (std::size_t k = 0; k < cond.size(); ++k) given(static_cast<Eigen::Index>(k)) = m[cond[k]];
    const Eigen::VectorXd mu = conditioner.conditional_mean(given);
    for (std::size_t k = 0; k < continuous.size(); ++k) m[continuous[k]] = mu(static_cast<Eigen::Index>(k));
  }
  return m;
}

double discrete_expectation(const JointTable& table, const TableModel& predictor, const std::vector<StepSpec>& steps,
                            const Coalition& coalition, std::optional<Clamp> clamp) {
  std::vector<ConditionalTable> tables;
  for (const auto& step : steps) {
    std::vector<std::size_t> levels;
    for (auto f : step.fixed_cond) levels.push_back(static_cast<std::size_t>(coalition.value(f)));
    tables.push_back(conditional_table(table, step.targets, step.sampled_cond, step.fixed_cond, levels));
  }
  std::vector<double> row(coalition.num_features(), 0.0);
  coalition.fill(row);
  double acc = 0.0;
  std::function<void(std::size_t, double)> walk = [&](std::size_t k, double weight) {
    if (k == steps.size()) {
      if (clamp) {
        const double saved = row[clamp->feature];
        row[clamp->feature] = clamp->value;
        acc += weight * predictor.evaluate(row);
        row[clamp->feature] = saved;
      } else {
        acc += weight * predictor.evaluate(row);
      }
      return;
    }
    const auto& step = steps[k];
    const auto& ct = tables[k];
    const auto c = ct.cond_code(row, step.sampled_cond);
    const double total = ct.cond_mass(c);
    if (!(total > 0.0)) throw ZeroProbabilityError("exact summation reached a conditioning event of probability zero");
    const auto& mass = ct.mass[c];
    for (std::size_t t = 0; t < mass.size(); ++t) {
      if (mass[t] == 0.0) continue;
      for (std::size_t j = 0; j < step.targets.size(); ++j) {
        row[step.targets[j]] = static_cast<double>(ct.target_index.level(t, j));
      }
      walk(k + 1, weight * (mass[t] / total));
    }
  };
  walk(0, 1.0);
  return acc;
}

void check_clamp(const Coalition& coalition, std::optional<Clamp> clamp) {
  if (clamp && (clamp->feature >= coalition.num_features() || coalition.contains(clamp->feature))) {
    throw ValidationError("clamp feature must lie outside the coalition");
  }
}

}  // namespace

ValueEstimate estimate_value(const Coalition& coalition, Variant variant, const ChainGraph* graph,
                             const DistributionModel& model, const Predictor& predictor,
                             const SamplerConfig& config) {
  const auto n = coalition.num_features();
  check_widths(model_features(model).size(), predictor.num_features(), n, graph);
  double fx = 0.0;
  if (coalition.members() == full_mask(n)) {
    std::vector<double> x(n);
    coalition.fill(x);
    fx = predictor.predict_one(x);
  }
  return monte_carlo(model, graph, predictor, variant, coalition, {}, 0, config, fx).value;
}

ValueEstimate exact_value_linear(const Coalition& coalition, Variant variant, const ChainGraph* graph,
                                 const GaussianModel& model, const LinearModel& predictor,
                                 std::optional<Clamp> clamp) {
  check_widths(model.num_features(), predictor.num_features(), coalition.num_features(), graph);
  check_clamp(coalition, clamp);
  auto m = propagated_means(model, sampling_steps(variant, graph, coalition), coalition);
  if (clamp) m[clamp->feature] = clamp->value;
  return exact_estimate(predictor.evaluate(m));
}

ValueEstimate exact_value_discrete(const Coalition& coalition, Variant variant, const ChainGraph* graph,
                                   const JointTable& table, const TableModel& predictor,
                                   std::optional<Clamp> clamp) {
  check_widths(table.num_features(), predictor.num_features(), coalition.num_features(), graph);
  check_clamp(coalition, clamp);
  for (std::size_t f = 0; f < table.num_features(); ++f) {
    if (predictor.index().radix(f) != table.index().radix(f)) {
      throw ValidationError("predictor table and joint table disagree on the levels of feature " +
                            table.features()[f].name);
    }
  }
  return exact_estimate(
      discrete_expectation(table, predictor, sampling_steps(variant, graph, coalition), coalition, clamp));
}

// ------------------------------------------------------------------ value functions

MonteCarloValueFunction::MonteCarloValueFunction(const DistributionModel& model, const ChainGraph* graph,
                                                 const Predictor& predictor, Variant variant,
                                                 std::vector<double> instance, SamplerConfig config)
    : model_(model), graph_(graph), predictor_(predictor), variant_(variant), instance_(std::move(instance)),
      config_(config) {
  check_widths(model_features(model_).size(), predictor_.num_features(), instance_.size(), graph_);
  if (variant_ == Variant::causal && graph_ == nullptr) throw ValidationError("the causal variant needs a chain graph");
  if (config_.n_samples == 0) throw ValidationError("n_samples must be at least 1");
  fx_ = predictor_.predict_one(instance_);
  if (!std::isfinite(fx_)) throw PredictorError("predictor returned a non-finite value", format_double(fx_));
}

CoalitionValues MonteCarloValueFunction::evaluate(FeatureMask coalition, FeatureMask clamp) const {
  return monte_carlo(model_, graph_, predictor_, variant_, Coalition(coalition, instance_), instance_, clamp,
                     config_, fx_);
}

LinearValueFunction::LinearValueFunction(const GaussianModel& model, const ChainGraph* graph,
                                         const LinearModel& predictor, Variant variant, std::vector<double> instance)
    : model_(model), graph_(graph), predictor_(predictor), variant_(variant), instance_(std::move(instance)) {
  check_widths(model_.num_features(), predictor_.num_features(), instance_.size(), graph_);
  if (variant_ == Variant::causal && graph_ == nullptr) throw ValidationError("the causal variant needs a chain graph");
  fx_ = predictor_.evaluate(instance_);
}

CoalitionValues LinearValueFunction::evaluate(FeatureMask coalition, FeatureMask clamp) const {
  const Coalition c(coalition, instance_);
  CoalitionValues out;
  out.value = exact_value_linear(c, variant_, graph_, model_, predictor_);
  for (auto i : mask_members(clamp)) out.clamped.emplace_back(i, exact_value_linear(c, variant_, graph_, model_, predictor_, Clamp{i, instance_[i]}));
  return out;
}

DiscreteValueFunction::DiscreteValueFunction(const JointTable& table, const ChainGraph* graph,
                                             const TableModel& predictor, Variant variant,
                                             std::vector<double> instance)
    : table_(table), graph_(graph), predictor_(predictor), variant_(variant), instance_(std::move(instance)) {
  check_widths(table_.num_features(), predictor_.num_features(), instance_.size(), graph_);
  if (variant_ == Variant::causal && graph_ == nullptr) throw ValidationError("the causal variant needs a chain graph");
  fx_ = predictor_.evaluate(instance_);
}

CoalitionValues DiscreteValueFunction::evaluate(FeatureMask coalition, FeatureMask clamp) const {
  const Coalition c(coalition, instance_);
  CoalitionValues out;
  out.value = exact_value_discrete(c, variant_, graph_, table_, predictor_);
  for (auto i : mask_members(clamp)) out.clamped.emplace_back(i, exact_value_discrete(c, variant_, graph_, table_, predictor_, Clamp{i, instance_[i]}));
  return out;
}

// ------------------------------------------------------------------ memo

void ValueMemo::ensure(FeatureMask coalition, FeatureMask clamp) {
  FeatureMask missing_clamp = 0;
  bool missing_value = false;
  {
    std::unique_lock lock(mu_);
    for (;;) {
      missing_value = !values_.contains(coalition);
      const auto it = mixed_done_.find(coalition);
      missing_clamp = clamp & ~(it == mixed_done_.end() ? FeatureMask{0} : it->second);
      if (!missing_value && missing_clamp == 0) return;
      if (!in_flight_.contains(coalition)) break;
      cv_.wait(lock);
    }
    in_flight_.insert(coalition);
  }
  CoalitionValues result;
  try {
    result = fn_.evaluate(coalition, missing_clamp);
  } catch (...) {
    std::lock_guard lock(mu_);
    in_flight_.erase(coalition);
    cv_.notify_all();
    throw;
  }
  std::lock_guard lock(mu_);
  values_.try_emplace(coalition, result.value);
  for (const auto& [i, est] : result.clamped) mixed_.try_emplace({coalition, i}, est);
  mixed_done_[coalition] |= missing_clamp;
  in_flight_.erase(coalition);
  ++evaluations_;
  cv_.notify_all();
}

ValueEstimate ValueMemo::value(FeatureMask coalition) {
  ensure(coalition, 0);
  std::lock_guard lock(mu_);
  return values_.at(coalition);
}

ValueEstimate ValueMemo::mixed(FeatureMask coalition, std::size_t feature) {
  if (has_feature(coalition, feature)) throw ValidationError("mixed term needs a feature outside the coalition");
  if (fn_.variant() == Variant::marginal) return value(coalition | feature_bit(feature));
  ensure(coalition, feature_bit(feature));
  std::lock_guard lock(mu_);
  return mixed_.at({coalition, feature});
}

void ValueMemo::prefetch(const std::vector<std::pair<FeatureMask, FeatureMask>>& requests, std::size_t threads) {
  auto run = [&](const std::pair<FeatureMask, FeatureMask>& r) {
    FeatureMask clamp = fn_.variant() == Variant::marginal ? 0 : r.second;
    ensure(r.first, clamp);
    if (fn_.variant() == Variant::marginal) {
      for (auto i : mask_members(r.second)) ensure(r.first | feature_bit(i), 0);
    }
  };
  if (threads <= 1 || requests.size() <= 1) {
    for (const auto& r : requests) run(r);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  const auto workers = std::min(threads, requests.size());
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const auto k = next.fetch_add(1);
        if (k >= requests.size()) return;
        try {
          run(requests[k]);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          next.store(requests.size());
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::size_t ValueMemo::evaluations() const {
  std::lock_guard lock(mu_);
  return evaluations_;
}

std::map<FeatureMask, ValueEstimate> ValueMemo::values() const {
  std::lock_guard lock(mu_);
  return values_;
}

std::map<std::pair<FeatureMask, std::size_t>, ValueEstimate> ValueMemo::mixed_values() const {
  std::lock_guard lock(mu_);
  return mixed_;
}

}  // namespace cshap
