#include "causal_shap/shapley.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "causal_shap/data.hpp"
#include "causal_shap/errors.hpp"
#include "causal_shap/rng.hpp"

namespace cshap {

std::string to_string(Symmetry s) { return s == Symmetry::symmetric ? "symmetric" : "asymmetric"; }

Symmetry parse_symmetry(std::string_view text) {
  if (text == "symmetric") return Symmetry::symmetric;
  if (text == "asymmetric") return Symmetry::asymmetric;
  throw ValidationError("symmetry must be symmetric or asymmetric; got '" + std::string(text) + "'");
}

PermutationDistribution PermutationDistribution::exact(Symmetry symmetry, const ChainGraph* graph) {
  PermutationDistribution d;
  d.mode = symmetry == Symmetry::symmetric ? PermutationMode::exact_uniform : PermutationMode::exact_asymmetric;
  d.graph = graph;
  return d;
}

PermutationDistribution PermutationDistribution::sampled(Symmetry symmetry, std::size_t n_permutations,
                                                         std::uint64_t seed, const ChainGraph* graph) {
  PermutationDistribution d;
  d.mode = symmetry == Symmetry::symmetric ? PermutationMode::sampled_uniform : PermutationMode::sampled_asymmetric;
  d.n_permutations = n_permutations;
  d.seed = seed;
  d.graph = graph;
  return d;
}

// ------------------------------------------------------------------ linear extensions

LinearExtensionCounts::LinearExtensionCounts(std::vector<FeatureMask> must_precede)
    : must_precede_(std::move(must_precede)) {
  const auto n = must_precede_.size();
  if (n > kMaxEnumerationCap) {
    throw ValidationError("ordering counts support at most " + std::to_string(kMaxEnumerationCap) + " features");
  }
  counts_.assign(std::size_t{1} << n, 0);
  counts_[0] = 1;
  for (FeatureMask t = 1; t < counts_.size(); ++t) {
    std::uint64_t c = 0;
    for (FeatureMask rest = t; rest != 0; rest &= rest - 1) {
      const auto j = static_cast<std::size_t>(std::countr_zero(rest));
      if ((must_precede_[j] & t) == 0) c += counts_[t & ~feature_bit(j)];
    }
    counts_[t] = c;
  }
}

LinearExtensionCounts LinearExtensionCounts::of(const ChainGraph* graph, std::size_t n) {
  std::vector<FeatureMask> pre(n, 0);
  if (graph != nullptr) {
    if (graph->num_features() != n) throw ValidationError("chain graph does not match the number of features");
    for (std::size_t f = 0; f < n; ++f) pre[f] = graph->must_precede(f);
  }
  return LinearExtensionCounts(std::move(pre));
}

bool LinearExtensionCounts::is_ideal(FeatureMask subset) const {
  for (FeatureMask rest = subset; rest != 0; rest &= rest - 1) {
    const auto f = static_cast<std::size_t>(std::countr_zero(rest));
    if ((must_precede_[f] & ~subset) != 0) return false;
  }
  return true;
}

Permutation LinearExtensionCounts::sample(std::mt19937_64& engine) const {
  FeatureMask remaining = full_mask(num_features());
  std::vector<std::size_t> order;
  while (remaining != 0) {
    std::uniform_int_distribution<std::uint64_t> pick(0, counts_[remaining] - 1);
    auto r = pick(engine);
    for (FeatureMask rest = remaining; rest != 0; rest &= rest - 1) {
      const auto j = static_cast<std::size_t>(std::countr_zero(rest));
      if ((must_precede_[j] & remaining) != 0) continue;
      const auto c = counts_[remaining & ~feature_bit(j)];
      if (r < c) {
        order.push_back(j);
        remaining &= ~feature_bit(j);
        break;
      }
      r -= c;
    }
  }
  return Permutation(std::move(order));
}

Permutation sample_uniform_permutation(std::size_t n, std::mt19937_64& engine) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t k = n; k > 1; --k) {
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    std::swap(order[k - 1], order[pick(engine)]);
  }
  return Permutation(std::move(order));
}

Permutation sample_consistent_permutation(const ChainGraph& graph, std::mt19937_64& engine) {
  const auto n = graph.num_features();
  if (n <= kMaxEnumerationCap) return LinearExtensionCounts::of(&graph, n).sample(engine);
  FeatureMask placed = 0;
  std::vector<std::size_t> order;
  while (order.size() < n) {
    std::vector<std::size_t> available;
    for (std::size_t f = 0; f < n; ++f) {
      if (!has_feature(placed, f) && (graph.must_precede(f) & ~placed) == 0) available.push_back(f);
    }
    std::uniform_int_distribution<std::size_t> pick(0, available.size() - 1);
    const auto f = available[pick(engine)];
    order.push_back(f);
    placed |= feature_bit(f);
  }
  return Permutation(std::move(order));
}

// ------------------------------------------------------------------ value table

ValueTable ValueTable::build(ValueMemo& memo, const std::vector<std::pair<FeatureMask, FeatureMask>>& requests,
                             std::size_t threads) {
  memo.prefetch(requests, threads);
  ValueTable table;
  table.n_ = memo.function().num_features();
  table.variant_ = memo.function().variant();

  std::map<FeatureMask, ValueEstimate> raw_values;
  std::map<std::pair<FeatureMask, std::size_t>, ValueEstimate> raw_mixed;
  for (const auto& [s, clamp] : requests) {
    raw_values.try_emplace(s, memo.value(s));
    for (auto i : mask_members(clamp)) raw_mixed.try_emplace({s, i}, memo.mixed(s, i));
  }

  double largest = 0.0;
  for (const auto& [k, e] : raw_values) largest = std::max(largest, std::abs(e.value));
  for (const auto& [k, e] : raw_mixed) largest = std::max(largest, std::abs(e.value));
  if (largest > 0.0) {
    // Leave headroom for sums of up to n+2 grid values.
    const int headroom = static_cast<int>(std::ceil(std::log2(static_cast<double>(table.n_) + 2.0))) + 1;
    const int e = std::ilogb(largest) + 1;
    table.quantum_ = std::ldexp(1.0, e - 52 + headroom);
  }
  const double q = table.quantum_;
  auto snap = [q](ValueEstimate est) {
    const auto units = static_cast<std::int64_t>(std::llrint(est.value / q));
    est.value = static_cast<double>(units) * q;
    return std::make_pair(units, est);
  };
  for (const auto& [k, e] : raw_values) table.values_.emplace(k, snap(e));
  for (const auto& [k, e] : raw_mixed) table.mixed_.emplace(k, snap(e));
  return table;
}

ValueEstimate ValueTable::value(FeatureMask coalition) const {
  const auto it = values_.find(coalition);
  if (it == values_.end()) throw std::out_of_range("coalition was not evaluated");
  return it->second.second;
}

std::int64_t ValueTable::value_units(FeatureMask coalition) const {
  const auto it = values_.find(coalition);
  if (it == values_.end()) throw std::out_of_range("coalition was not evaluated");
  return it->second.first;
}

ValueEstimate ValueTable::mixed(FeatureMask coalition, std::size_t feature) const {
  const auto it = mixed_.find({coalition, feature});
  if (it == mixed_.end()) throw std::out_of_range("mixed term was not evaluated");
  return it->second.second;
}

std::int64_t ValueTable::mixed_units(FeatureMask coalition, std::size_t feature) const {
  const auto it = mixed_.find({coalition, feature});
  if (it == mixed_.end()) throw std::out_of_range("mixed term was not evaluated");
  return it->second.first;
}

std::vector<std::pair<FeatureMask, FeatureMask>> permutation_requests(const Permutation& perm, bool decompose) {
  std::vector<std::pair<FeatureMask, FeatureMask>> out;
  FeatureMask s = 0;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    const auto i = perm[k];
    out.emplace_back(s, decompose ? feature_bit(i) : FeatureMask{0});
    s |= feature_bit(i);
  }
  out.emplace_back(s, 0);
  return out;
}

// ------------------------------------------------------------------ contributions

ContributionRecord contribution(const Permutation& perm, std::size_t feature, const ValueTable& table) {
  const auto s = perm.predecessors(feature);
  const auto with = table.value(s | feature_bit(feature));
  const auto without = table.value(s);
  ContributionRecord rec;
  rec.feature = feature;
  rec.permutation = perm;
  rec.total = with.value - without.value;
  rec.std_error = std::hypot(with.std_error, without.std_error);
  return rec;
}

ContributionRecord decompose_effects(const Permutation& perm, std::size_t feature, const ValueTable& table) {
  auto rec = contribution(perm, feature, table);
  const auto s = perm.predecessors(feature);
  const auto with = table.value(s | feature_bit(feature));
  const auto without = table.value(s);
  const auto mixed = table.mixed(s, feature);
  rec.direct = mixed.value - without.value;
  rec.indirect = with.value - mixed.value;
  rec.direct_std_error = std::hypot(mixed.std_error, without.std_error);
  rec.indirect_std_error = table.variant() == Variant::marginal ? 0.0 : std::hypot(with.std_error, mixed.std_error);
  return rec;
}

double permutation_sum(const Permutation& perm, const ValueTable& table) {
  double sum = 0.0;
  for (std::size_t k = 0; k < perm.size(); ++k) sum += contribution(perm, perm[k], table).total;
  return sum;
}

// ------------------------------------------------------------------ aggregation

namespace {

using Wide = __int128;

// Identifies an estimate in the table; under the marginal variant a mixed
// term is the value of the larger coalition.
struct Key {
  FeatureMask coalition;
  int clamp;  // -1 for v(S)
  auto operator<=>(const Key&) const = default;
};

// Linear combination Σ a_T v_T / C accumulated in exact integer grid units.
struct Accumulator {
  Wide units = 0;
  std::map<Key, Wide> coefficients;
  double perm_sum = 0.0;
  double perm_sq = 0.0;

  void add(const Key& key, Wide coefficient, std::int64_t grid_units) {
    units += coefficient * grid_units;
    coefficients[key] += coefficient;
  }
};

double scaled(Wide units, Wide denominator, double quantum) {
  return static_cast<double>(static_cast<long double>(units) / static_cast<long double>(denominator)) * quantum;
}

struct Aggregator {
  const ValueTable& table;
  bool marginal;

  Key value_key(FeatureMask s) const { return Key{s, -1}; }
  Key mixed_key(FeatureMask s, std::size_t i) const {
    return marginal ? Key{s | feature_bit(i), -1} : Key{s, static_cast<int>(i)};
  }
  std::int64_t units(const Key& k) const {
    return k.clamp < 0 ? table.value_units(k.coalition) : table.mixed_units(k.coalition, static_cast<std::size_t>(k.clamp));
  }
  double std_error(const Key& k) const {
    return k.clamp < 0 ? table.value(k.coalition).std_error
                       : table.mixed(k.coalition, static_cast<std::size_t>(k.clamp)).std_error;
  }

  // Adds c·[v(S+i) − v(S)] and its direct/indirect split.
  void add(Accumulator& total, Accumulator* direct, Accumulator* indirect, FeatureMask s, std::size_t i,
           Wide c) const {
    const Key with = value_key(s | feature_bit(i));
    const Key without = value_key(s);
    total.add(with, c, units(with));
    total.add(without, -c, units(without));
    if (direct != nullptr) {
      const Key mixed = mixed_key(s, i);
      direct->add(mixed, c, units(mixed));
      direct->add(without, -c, units(without));
      indirect->add(with, c, units(with));
      indirect->add(mixed, -c, units(mixed));
    }
  }

  // Value-function part of the variance of Σ a_T v_T / C.
  double value_variance(const Accumulator& acc, Wide denominator) const {
    double var = 0.0;
    for (const auto& [key, a] : acc.coefficients) {
      if (a == 0) continue;
      const double w = static_cast<double>(static_cast<long double>(a) / static_cast<long double>(denominator));
      const double se = std_error(key);
      var += w * w * se * se;
    }
    return var;
  }
};

double permutation_variance(const Accumulator& acc, std::size_t m) {
  if (m < 2) return 0.0;
  const double mean = acc.perm_sum / static_cast<double>(m);
  const double ss = std::max(0.0, acc.perm_sq - static_cast<double>(m) * mean * mean);
  return ss / static_cast<double>(m - 1) / static_cast<double>(m);
}

void check_distribution(const PermutationDistribution& dist, std::size_t n) {
  if (dist.is_asymmetric()) {
    if (dist.graph == nullptr) throw ValidationError("asymmetric permutation weights need a chain graph");
    if (dist.graph->num_features() != n) throw ValidationError("chain graph does not match the number of features");
  }
  if (dist.is_sampled()) {
    if (dist.n_permutations == 0) throw ValidationError("n_permutations must be at least 1");
    if (dist.rejection && dist.is_asymmetric() && n > kDefaultEnumerationCap) {
      throw ValidationError("rejection sampling of consistent permutations is limited to " +
                            std::to_string(kDefaultEnumerationCap) + " features");
    }
  } else {
    const auto cap = std::min(dist.enumeration_cap, kMaxEnumerationCap);
    if (n > cap) {
      throw ValidationError("exact enumeration is capped at " + std::to_string(cap) + " features, got " +
                            std::to_string(n) + "; use sampled permutations");
    }
  }
}

}  // namespace

AttributionReport shapley_values(const ValueFunction& fn, const PermutationDistribution& dist,
                                 const std::vector<std::string>& feature_names, const ShapleyOptions& options) {
  const auto n = fn.num_features();
  if (feature_names.size() != n) throw ValidationError("feature names do not match the value function");
  if (n == 0) throw ValidationError("no features to attribute");
  check_distribution(dist, n);
  const bool decompose = options.decompose;
  const FeatureMask full = full_mask(n);

  ValueMemo memo(fn);
  std::vector<Accumulator> total(n), direct(n), indirect(n);
  Wide denominator = 1;
  std::size_t m = 0;
  std::optional<ValueTable> table;

  if (!dist.is_sampled()) {
    const auto counts = LinearExtensionCounts::of(dist.is_asymmetric() ? dist.graph : nullptr, n);
    std::vector<std::pair<FeatureMask, FeatureMask>> requests;
    for (FeatureMask s = 0; s <= full; ++s) {
      if (!counts.is_ideal(s)) continue;
      FeatureMask clamp = 0;
      if (decompose) {
        for (auto i : mask_members(full & ~s)) {
          if (counts.is_ideal(s | feature_bit(i))) clamp |= feature_bit(i);
        }
      }
      requests.emplace_back(s, clamp);
    }
    table = ValueTable::build(memo, requests, options.threads);
    const Aggregator agg{*table, fn.variant() == Variant::marginal};
    for (const auto& [s, unused] : requests) {
      for (auto i : mask_members(full & ~s)) {
        const auto with = s | feature_bit(i);
        if (!counts.is_ideal(with)) continue;
        const Wide c = static_cast<Wide>(counts.count(s)) * static_cast<Wide>(counts.count(full & ~with));
        agg.add(total[i], decompose ? &direct[i] : nullptr, decompose ? &indirect[i] : nullptr, s, i, c);
      }
    }
    denominator = counts.total();
  } else {
    m = dist.n_permutations;
    RngStream rng(dist.seed, stream_label({static_cast<std::uint64_t>(StreamDomain::permutations)}));
    std::optional<LinearExtensionCounts> counts;
    if (dist.is_asymmetric() && !dist.rejection && n <= kMaxEnumerationCap) counts = LinearExtensionCounts::of(dist.graph, n);
    std::vector<Permutation> perms;
    perms.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
      if (!dist.is_asymmetric()) {
        perms.push_back(sample_uniform_permutation(n, rng.engine()));
      } else if (dist.rejection) {
        Permutation p;
        do {
          p = sample_uniform_permutation(n, rng.engine());
        } while (!is_consistent_permutation(*dist.graph, p));
        perms.push_back(std::move(p));
      } else if (counts) {
        perms.push_back(counts->sample(rng.engine()));
      } else {
        perms.push_back(sample_consistent_permutation(*dist.graph, rng.engine()));
      }
    }
    std::map<FeatureMask, FeatureMask> merged;
    for (const auto& p : perms) {
      for (const auto& [s, clamp] : permutation_requests(p, decompose)) merged[s] |= clamp;
    }
    table = ValueTable::build(memo, {merged.begin(), merged.end()}, options.threads);
    const Aggregator agg{*table, fn.variant() == Variant::marginal};
    for (const auto& p : perms) {
      for (std::size_t i = 0; i < n; ++i) {
        agg.add(total[i], decompose ? &direct[i] : nullptr, decompose ? &indirect[i] : nullptr, p.predecessors(i), i, 1);
        if (decompose) {
          const auto rec = decompose_effects(p, i, *table);
          direct[i].perm_sum += rec.direct;
          direct[i].perm_sq += rec.direct * rec.direct;
          indirect[i].perm_sum += rec.indirect;
          indirect[i].perm_sq += rec.indirect * rec.indirect;
          total[i].perm_sum += rec.total;
          total[i].perm_sq += rec.total * rec.total;
        } else {
          const double t = contribution(p, i, *table).total;
          total[i].perm_sum += t;
          total[i].perm_sq += t * t;
        }
      }
    }
    denominator = static_cast<Wide>(m);
  }

  const Aggregator agg{*table, fn.variant() == Variant::marginal};
  const double q = table->quantum();
  AttributionReport report;
  report.variant = fn.variant();
  report.symmetry = dist.symmetry();
  report.n_permutations = m;
  report.seed = dist.seed;
  report.n_samples = fn.n_samples();
  report.decomposed = decompose;
  const auto base = table->value(0);
  report.f0 = base.value;
  report.f0_std_error = base.std_error;
  report.fx = fn.prediction();
  for (std::size_t i = 0; i < n; ++i) {
    FeatureAttribution fa;
    fa.feature = feature_names[i];
    fa.phi = scaled(total[i].units, denominator, q);
    fa.std_error = std::sqrt(agg.value_variance(total[i], denominator) + permutation_variance(total[i], m));
    if (decompose) {
      fa.direct = scaled(direct[i].units, denominator, q);
      fa.indirect = scaled(indirect[i].units, denominator, q);
      // Dividing the two parts separately can leave their sum one rounding
      // step away from the undivided total; the split wins.
      fa.phi = fa.direct + fa.indirect;
      fa.direct_std_error =
          std::sqrt(agg.value_variance(direct[i], denominator) + permutation_variance(direct[i], m));
      fa.indirect_std_error =
          std::sqrt(agg.value_variance(indirect[i], denominator) + permutation_variance(indirect[i], m));
    }
    report.features.push_back(std::move(fa));
  }
  return report;
}

double AttributionReport::phi_sum() const {
  double s = 0.0;
  for (const auto& f : features) s += f.phi;
  return s;
}

double AttributionReport::phi_sum_std_error() const {
  double v = 0.0;
  for (const auto& f : features) v += f.std_error * f.std_error;
  return std::sqrt(v);
}

// ------------------------------------------------------------------ report files

namespace {

std::string permutations_field(std::size_t n) { return n == 0 ? "exact" : std::to_string(n); }

std::size_t parse_permutations(const std::string& text) {
  if (text == "exact") return 0;
  const double v = parse_number(text, "n_permutations");
  if (!(v >= 1.0) || v != std::floor(v)) throw ValidationError("n_permutations must be 'exact' or a positive integer");
  return static_cast<std::size_t>(v);
}

std::uint64_t parse_unsigned(const std::string& text, const std::string& what) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ValidationError(what + " must be a non-negative integer, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& text, const std::string& what) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ValidationError(what + " must be true or false, got '" + text + "'");
}

}  // namespace

std::string report_to_csv(const AttributionReport& r) {
  std::ostringstream out;
  out << "# variant," << to_string(r.variant) << '\n'
      << "# symmetry," << to_string(r.symmetry) << '\n'
      << "# seed," << r.seed << '\n'
      << "# n_samples," << r.n_samples << '\n'
      << "# n_permutations," << permutations_field(r.n_permutations) << '\n'
      << "# f0," << format_double(r.f0) << '\n'
      << "# f0_stderr," << format_double(r.f0_std_error) << '\n'
      << "# fx," << format_double(r.fx) << '\n'
      << "# decomposed," << (r.decomposed ? "true" : "false") << '\n';
  if (r.decomposed) {
    out << "feature,phi,direct,indirect,stderr,direct_stderr,indirect_stderr\n";
    for (const auto& f : r.features) {
      out << csv_field(f.feature) << ',' << format_double(f.phi) << ',' << format_double(f.direct) << ','
          << format_double(f.indirect) << ',' << format_double(f.std_error) << ','
          << format_double(f.direct_std_error) << ',' << format_double(f.indirect_std_error) << '\n';
    }
  } else {
    out << "feature,phi,stderr\n";
    for (const auto& f : r.features) {
      out << csv_field(f.feature) << ',' << format_double(f.phi) << ',' << format_double(f.std_error) << '\n';
    }
  }
  return out.str();
}

AttributionReport report_from_csv(const std::string& text) {
  AttributionReport r;
  std::istringstream in(text);
  std::string line;
  std::map<std::string, std::string> meta;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto fields = split_csv_line(line.substr(2));
      if (fields.size() != 2) throw ValidationError("malformed report metadata line: " + line);
      meta[fields[0]] = fields[1];
      continue;
    }
    header = split_csv_line(line);
    break;
  }
  auto need = [&](const std::string& key) -> const std::string& {
    const auto it = meta.find(key);
    if (it == meta.end()) throw ValidationError("report is missing the '" + key + "' metadata row");
    return it->second;
  };
  r.variant = parse_variant(need("variant"));
  r.symmetry = parse_symmetry(need("symmetry"));
  r.seed = parse_unsigned(need("seed"), "seed");
  r.n_samples = parse_unsigned(need("n_samples"), "n_samples");
  r.n_permutations = parse_permutations(need("n_permutations"));
  r.f0 = parse_number(need("f0"), "f0");
  r.f0_std_error = parse_number(need("f0_stderr"), "f0_stderr");
  r.fx = parse_number(need("fx"), "fx");
  r.decomposed = parse_bool(need("decomposed"), "decomposed");

  if (header.empty()) throw ValidationError("report has no column header");
  std::map<std::string, std::size_t> col;
  for (std::size_t k = 0; k < header.size(); ++k) col[header[k]] = k;
  std::vector<std::string> required = {"feature", "phi", "stderr"};
  if (r.decomposed) {
    for (const char* c : {"direct", "indirect", "direct_stderr", "indirect_stderr"}) required.emplace_back(c);
  }
  for (const auto& c : required) {
    if (!col.contains(c)) throw ValidationError("report is missing the '" + c + "' column");
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) throw ValidationError("report row has the wrong number of fields: " + line);
    FeatureAttribution f;
    f.feature = fields[col["feature"]];
    f.phi = parse_number(fields[col["phi"]], "phi");
    f.std_error = parse_number(fields[col["stderr"]], "stderr");
    if (r.decomposed) {
      f.direct = parse_number(fields[col["direct"]], "direct");
      f.indirect = parse_number(fields[col["indirect"]], "indirect");
      f.direct_std_error = parse_number(fields[col["direct_stderr"]], "direct_stderr");
      f.indirect_std_error = parse_number(fields[col["indirect_stderr"]], "indirect_stderr");
    }
    r.features.push_back(std::move(f));
  }
  return r;
}

nlohmann::json report_to_json(const AttributionReport& r) {
  nlohmann::json doc;
  doc["variant"] = to_string(r.variant);
  doc["symmetry"] = to_string(r.symmetry);
  doc["seed"] = r.seed;
  doc["n_samples"] = r.n_samples;
  if (r.n_permutations == 0) {
    doc["n_permutations"] = "exact";
  } else {
    doc["n_permutations"] = r.n_permutations;
  }
  doc["f0"] = r.f0;
  doc["f0_stderr"] = r.f0_std_error;
  doc["fx"] = r.fx;
  doc["decomposed"] = r.decomposed;
  auto& rows = doc["features"] = nlohmann::json::array();
  for (const auto& f : r.features) {
    nlohmann::json row = {{"feature", f.feature}, {"phi", f.phi}, {"stderr", f.std_error}};
    if (r.decomposed) {
      row["direct"] = f.direct;
      row["indirect"] = f.indirect;
      row["direct_stderr"] = f.direct_std_error;
      row["indirect_stderr"] = f.indirect_std_error;
    }
    rows.push_back(std::move(row));
  }
  return doc;
}

AttributionReport report_from_json(const nlohmann::json& doc) {
  try {
    AttributionReport r;
    r.variant = parse_variant(doc.at("variant").get<std::string>());
    r.symmetry = parse_symmetry(doc.at("symmetry").get<std::string>());
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.n_samples = doc.at("n_samples").get<std::size_t>();
    const auto& np = doc.at("n_permutations");
    r.n_permutations = np.is_string() ? parse_permutations(np.get<std::string>()) : np.get<std::size_t>();
    r.f0 = doc.at("f0").get<double>();
    r.f0_std_error = doc.at("f0_stderr").get<double>();
    r.fx = doc.at("fx").get<double>();
    r.decomposed = doc.at("decomposed").get<bool>();
    for (const auto& row : doc.at("features")) {
      FeatureAttribution f;
      f.feature = row.at("feature").get<std::string>();
      f.phi = row.at("phi").get<double>();
      f.std_error = row.at("stderr").get<double>();
      if (r.decomposed) {
        f.direct = row.at("direct").get<double>();
        f.indirect = row.at("indirect").get<double>();
        f.direct_std_error = row.at("direct_stderr").get<double>();
        f.indirect_std_error = row.at("indirect_stderr").get<double>();
      }
      r.features.push_back(std::move(f));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
}

}  // namespace cshap
