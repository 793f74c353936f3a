#pragma once

// Helpers shared by the unit tests and the acceptance binary. The oracles here
// work straight from the joint table by brute-force summation and never use
// the library's conditional tables, samplers or permutation weights.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "causal_shap/analytic.hpp"
#include "causal_shap/chain_graph.hpp"
#include "causal_shap/conditioning.hpp"
#include "causal_shap/joint_table.hpp"
#include "causal_shap/predictor.hpp"
#include "causal_shap/shapley.hpp"

namespace testing {

using cshap::FeatureMask;

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "cshap-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Strictly positive random joint table over n binary features.
inline cshap::JointTable random_joint_table(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> p(std::size_t{1} << n);
  for (auto& v : p) v = u(rng);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& v : p) v /= total;
  return cshap::JointTable(cshap::binary_features(n), std::move(p));
}

inline cshap::TableModel random_table_model(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> out(std::size_t{1} << n);
  for (auto& v : out) v = u(rng);
  return cshap::TableModel(cshap::AssignmentIndex(std::vector<std::size_t>(n, 2)), std::move(out));
}

inline std::vector<double> random_binary_instance(std::size_t n, std::mt19937_64& rng) {
  std::vector<double> x(n);
  for (auto& v : x) v = static_cast<double>(rng() & 1U);
  return x;
}

// Random ordered partition into components with random confounding flags.
inline cshap::ChainGraph random_graph(const cshap::FeatureSpace& space, std::mt19937_64& rng) {
  const std::size_t n = space.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<std::size_t>> order;
  std::vector<bool> confounded;
  for (std::size_t k = 0; k < n; ++k) {
    if (order.empty() || (rng() % 2 == 0)) {
      order.emplace_back();
      confounded.push_back(rng() % 2 == 0);
    }
    order.back().push_back(perm[k]);
  }
  return cshap::build_chain_graph(space, order, confounded);
}

inline cshap::ChainGraph random_graph(std::size_t n, std::mt19937_64& rng) {
  return random_graph(cshap::binary_features(n), rng);
}

// Game given directly by a table of coalition values.
class TabulatedGame final : public cshap::ValueFunction {
 public:
  explicit TabulatedGame(std::vector<double> values)
      : values_(std::move(values)), n_(static_cast<std::size_t>(std::countr_zero(values_.size()))) {}
  std::size_t num_features() const override { return n_; }
  cshap::Variant variant() const override { return cshap::Variant::conditional; }
  bool exact() const override { return true; }
  double prediction() const override { return values_.back(); }
  cshap::CoalitionValues evaluate(FeatureMask s, FeatureMask) const override {
    cshap::CoalitionValues out;
    out.value = {values_.at(s), 0.0, 0, true};
    return out;
  }

 private:
  std::vector<double> values_;
  std::size_t n_;
};

// Brute-force v(S) for a binary joint table: the out-of-coalition
// distribution is written directly as a product of ratios of table marginals.
class DiscreteOracle {
 public:
  DiscreteOracle(const cshap::JointTable& table, const cshap::TableModel& f, const cshap::ChainGraph* graph,
                 cshap::Variant variant, std::vector<double> x)
      : p_(table.probabilities()), f_(f.outputs()), graph_(graph), variant_(variant), x_(std::move(x)),
        n_(x_.size()) {}

  double value(FeatureMask s) const {
    double v = 0.0;
    for (std::size_t z = 0; z < p_.size(); ++z) {
      if (!agrees(z, code(x_), s)) continue;  // z carries x_S and ranges over the rest
      v += weight(z, s) * f_[z];
    }
    return v;
  }

  // Average of v(pred + i) - v(pred) over every permutation (or every
  // consistent one).
  std::vector<double> shapley(bool asymmetric) const {
    std::vector<std::size_t> order(n_);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> phi(n_, 0.0);
    std::size_t count = 0;
    do {
      if (asymmetric && !consistent(order)) continue;
      ++count;
      FeatureMask pred = 0;
      for (const auto i : order) {
        phi[i] += value(pred | cshap::feature_bit(i)) - value(pred);
        pred |= cshap::feature_bit(i);
      }
    } while (std::next_permutation(order.begin(), order.end()));
    for (auto& v : phi) v /= static_cast<double>(count);
    return phi;
  }

 private:
  std::size_t code(const std::vector<double>& x) const {
    std::size_t c = 0;
    for (std::size_t f = 0; f < n_; ++f) c = 2 * c + static_cast<std::size_t>(x[f]);
    return c;
  }
  std::size_t bit(std::size_t z, std::size_t f) const { return (z >> (n_ - 1 - f)) & 1U; }
  bool agrees(std::size_t a, std::size_t b, FeatureMask m) const {
    for (std::size_t f = 0; f < n_; ++f) {
      if (cshap::has_feature(m, f) && bit(a, f) != bit(b, f)) return false;
    }
    return true;
  }
  // P(X_m = z_m).
  double marginal(std::size_t z, FeatureMask m) const {
    double t = 0.0;
    for (std::size_t w = 0; w < p_.size(); ++w) {
      if (agrees(w, z, m)) t += p_[w];
    }
    return t;
  }
  double weight(std::size_t z, FeatureMask s) const {
    const FeatureMask all = cshap::full_mask(n_);
    switch (variant_) {
      case cshap::Variant::marginal:
        return marginal(z, all & ~s);
      case cshap::Variant::conditional:
        return marginal(z, all) / marginal(z, s);
      case cshap::Variant::causal:
        break;
    }
    double w = 1.0;
    for (std::size_t c = 0; c < graph_->num_components(); ++c) {
      const FeatureMask tau = graph_->component_mask(c);
      const FeatureMask out = tau & ~s;
      if (out == 0) continue;
      FeatureMask cond = graph_->parent_mask(c);
      if (!graph_->components()[c].confounded) cond |= tau & s;
      w *= marginal(z, out | cond) / marginal(z, cond);
    }
    return w;
  }
  bool consistent(const std::vector<std::size_t>& order) const {
    FeatureMask seen = 0;
    for (const auto i : order) {
      if ((graph_->must_precede(i) & ~seen) != 0) return false;
      seen |= cshap::feature_bit(i);
    }
    return true;
  }

  const std::vector<double>& p_;
  const std::vector<double>& f_;
  const cshap::ChainGraph* graph_;
  cshap::Variant variant_;
  std::vector<double> x_;
  std::size_t n_;
};

inline std::vector<double> phis(const cshap::AttributionReport& r) {
  std::vector<double> v;
  for (const auto& f : r.features) v.push_back(f.phi);
  return v;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

// Closed-form two-feature attributions rebuilt from the per-ordering effects:
// in order (a, b) feature a gets beta_a d_a directly and beta_b (E[X_b | do x_a] - xbar_b)
// indirectly; feature b gets beta_b (x_b - E[X_b | do x_a]) directly.
// `moves[a]` says whether intervening on a shifts the other feature's mean.
struct ToyCell {
  double direct[2];
  double indirect[2];
};

inline ToyCell toy_cell(const cshap::ToyParams& p, const bool moves[2], bool order12, bool order21) {
  const double x[2] = {p.x1, p.x2};
  const double xbar[2] = {p.xbar1, p.xbar2};
  const double beta[2] = {p.beta1, p.beta2};
  const double alpha_from[2] = {p.alpha1, p.alpha2};  // slope of E[X_other | x_a]
  ToyCell cell{{0, 0}, {0, 0}};
  int orders = 0;
  for (int a = 0; a < 2; ++a) {
    if ((a == 0 && !order12) || (a == 1 && !order21)) continue;
    ++orders;
    const int b = 1 - a;
    const double e_b = moves[a] ? xbar[b] + alpha_from[a] * (x[a] - xbar[a]) : xbar[b];
    cell.direct[a] += beta[a] * (x[a] - xbar[a]);
    cell.indirect[a] += beta[b] * (e_b - xbar[b]);
    cell.direct[b] += beta[b] * (x[b] - e_b);
  }
  for (int k = 0; k < 2; ++k) {
    cell.direct[k] /= orders;
    cell.indirect[k] /= orders;
  }
  return cell;
}

}  // namespace testing
