// Runs the ten acceptance checks and prints one PASS/FAIL line per check.
// Exits nonzero if any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "causal_shap/analytic.hpp"
#include "causal_shap/cli/config.hpp"
#include "causal_shap/cli/external_predictor.hpp"
#include "causal_shap/cli/run.hpp"
#include "causal_shap/errors.hpp"
#include "causal_shap/gaussian_model.hpp"
#include "causal_shap/value_function.hpp"
#include "support.hpp"

using namespace cshap;
namespace fs = std::filesystem;

namespace {

// Collects failures of one check; the first few are printed.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures_.size() < 5) failures_.push_back(what);
    ++count_;
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream s;
    s.precision(17);
    s << what << ": got " << got << ", want " << want;
    expect(std::abs(got - want) <= tol, s.str());
  }
  bool ok() const { return count_ == 0; }
  std::string summary() const {
    std::string s = std::to_string(count_) + " failure(s)";
    for (const auto& f : failures_) s += "; " + f;
    return s;
  }

 private:
  std::vector<std::string> failures_;
  std::size_t count_ = 0;
};

const std::array<ToyStructure, 4> kStructures = {ToyStructure::chain, ToyStructure::fork, ToyStructure::confounder,
                                                 ToyStructure::cycle};
const std::array<Variant, 3> kVariants = {Variant::marginal, Variant::conditional, Variant::causal};
const std::array<Symmetry, 2> kSymmetries = {Symmetry::symmetric, Symmetry::asymmetric};

std::string cell_name(ToyStructure s, Variant v, Symmetry y) {
  return to_string(s) + "/" + to_string(v) + "/" + to_string(y);
}

// ---- 1 ----------------------------------------------------------------------

// Bottom table of the toy figure for f = beta x2. D: only direct effects
// (phi1 = 0). E: the effect of x1 through x2 is shared evenly between the
// orderings. R: x1 takes the whole effect through x2.
char pattern(ToyStructure s, Variant v, Symmetry y) {
  if (v == Variant::marginal) return 'D';
  const bool sym = y == Symmetry::symmetric;
  if (v == Variant::conditional) {
    if (sym) return 'E';
    return s == ToyStructure::chain ? 'R' : s == ToyStructure::fork ? 'D' : 'E';
  }
  switch (s) {
    case ToyStructure::chain: return sym ? 'E' : 'R';
    case ToyStructure::fork: return 'D';
    case ToyStructure::confounder: return 'D';
    case ToyStructure::cycle: return 'E';
  }
  return '?';
}

bool toy_moves(ToyStructure s, Variant v, std::size_t feature) {
  if (v == Variant::marginal) return false;
  if (v == Variant::conditional) return true;
  switch (s) {
    case ToyStructure::chain: return feature == 0;
    case ToyStructure::fork: return feature == 1;
    case ToyStructure::confounder: return false;
    case ToyStructure::cycle: return true;
  }
  return false;
}

testing::ToyCell toy_oracle(ToyStructure s, Variant v, Symmetry y, const ToyParams& p) {
  const bool moves[2] = {toy_moves(s, v, 0), toy_moves(s, v, 1)};
  bool o12 = true, o21 = true;
  if (y == Symmetry::asymmetric) {
    if (s == ToyStructure::chain) o21 = false;
    if (s == ToyStructure::fork) o12 = false;
  }
  return testing::toy_cell(p, moves, o12, o21);
}

std::string criterion1() {
  Check c;
  const auto p = ToyParams::standardized(0.8, 0.0, 2.0, 1.0, 1.5);
  const double b = 2.0, a = 0.8, x1 = 1.0, x2 = 1.5;
  for (const auto s : kStructures) {
    for (const auto v : kVariants) {
      for (const auto y : kSymmetries) {
        const auto got = toy_shapley(s, v, y, p);
        const auto name = cell_name(s, v, y);
        double phi1 = 0, ind1 = 0;
        switch (pattern(s, v, y)) {
          case 'D': break;
          case 'E': phi1 = ind1 = 0.5 * b * a * x1; break;
          case 'R': phi1 = ind1 = b * a * x1; break;
        }
        c.near(got[0].total, phi1, 1e-12, name + " phi1");
        c.near(got[0].indirect, ind1, 1e-12, name + " indirect1");
        c.near(got[0].direct, 0.0, 1e-12, name + " direct1");
        c.near(got[1].total, b * x2 - phi1, 1e-12, name + " phi2");
        c.near(got[1].indirect, 0.0, 1e-12, name + " indirect2");
        const auto oracle = toy_oracle(s, v, y, p);
        for (int i = 0; i < 2; ++i) {
          c.near(got[i].direct, oracle.direct[i], 1e-12, name + " oracle direct");
          c.near(got[i].indirect, oracle.indirect[i], 1e-12, name + " oracle indirect");
          c.expect(got[i].direct + got[i].indirect == got[i].total, name + " split");
        }
      }
    }
  }
  const auto chain = toy_shapley(ToyStructure::chain, Variant::causal, Symmetry::symmetric, p);
  c.near(chain[0].indirect, 0.8, 1e-12, "worked phi1");
  c.near(chain[1].direct, 2.2, 1e-12, "worked phi2");
  // Random parameters against the per-ordering oracle.
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 200; ++trial) {
    const ToyParams q{u(rng) / 2, u(rng) / 2, u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
    for (const auto s : kStructures) {
      for (const auto v : kVariants) {
        for (const auto y : kSymmetries) {
          const auto got = toy_shapley(s, v, y, q);
          const auto want = toy_oracle(s, v, y, q);
          for (int i = 0; i < 2; ++i) {
            c.near(got[i].direct, want.direct[i], 1e-12, cell_name(s, v, y) + " random direct");
            c.near(got[i].indirect, want.indirect[i], 1e-12, cell_name(s, v, y) + " random indirect");
          }
        }
      }
    }
  }
  return c.ok() ? "" : c.summary();
}

// ---- 2 ----------------------------------------------------------------------

std::string criterion2(std::string& detail) {
  Check c;
  const auto p = ToyParams::standardized(0.8, 0.0, 2.0, 1.0, 1.5);
  const auto gauss = toy_gaussian(p);
  const DistributionModel model = gauss;
  const auto lin = toy_linear_model(p);
  double worst_se = 0.0;
  for (const auto s : kStructures) {
    const auto g = toy_graph(s);
    for (const auto v : kVariants) {
      const MonteCarloValueFunction fn(model, &g, lin, v, {p.x1, p.x2}, SamplerConfig{20000, 2024});
      for (const auto y : kSymmetries) {
        const auto r = shapley_values(fn, PermutationDistribution::exact(y, &g), {"x1", "x2"}, {true, 1});
        const auto want = toy_shapley(s, v, y, p);
        for (int i = 0; i < 2; ++i) {
          const auto& f = r.features[i];
          const auto name = cell_name(s, v, y) + " x" + std::to_string(i + 1);
          worst_se = std::max({worst_se, f.std_error, f.direct_std_error, f.indirect_std_error});
          c.near(f.phi, want[i].total, 4 * f.std_error + 1e-12, name + " phi");
          c.near(f.direct, want[i].direct, 4 * f.direct_std_error + 1e-12, name + " direct");
          c.near(f.indirect, want[i].indirect, 4 * f.indirect_std_error + 1e-12, name + " indirect");
          c.expect(f.std_error < 0.05, name + " stderr " + std::to_string(f.std_error));
        }
      }
    }
  }
  detail = "largest stderr " + std::to_string(worst_se);
  return c.ok() ? "" : c.summary();
}

// ---- 3 ----------------------------------------------------------------------

std::string criterion3() {
  Check c;
  for (const double eps : {0.0, 0.25, 0.5, 0.75}) {
    const auto tag = "eps=" + std::to_string(eps);
    // Marginal, symmetric conditional, and causal under a confounder or a cycle.
    std::vector<std::array<double, 2>> identical = {
        xor_shapley({eps, XorStructure::none, 0, 0}, Variant::marginal, Symmetry::symmetric),
        xor_shapley({eps, XorStructure::none, 0, 0}, Variant::conditional, Symmetry::symmetric),
        xor_shapley({eps, XorStructure::confounder, 0, 0}, Variant::causal, Symmetry::symmetric),
        xor_shapley({eps, XorStructure::mutual, 0, 0}, Variant::causal, Symmetry::symmetric),
    };
    for (const auto& phi : identical) {
      c.near(phi[0], eps / 4 - 0.25, 1e-12, tag + " identical phi1");
      c.near(phi[1], eps / 4 - 0.25, 1e-12, tag + " identical phi2");
    }
    const auto sym = xor_shapley({eps, XorStructure::chain12, 0, 0}, Variant::causal, Symmetry::symmetric);
    c.near(sym[0], -0.25, 1e-12, tag + " symmetric causal phi1");
    c.near(sym[1], eps / 2 - 0.25, 1e-12, tag + " symmetric causal phi2");
    for (const auto v : {Variant::conditional, Variant::causal}) {
      const auto asym = xor_shapley({eps, XorStructure::chain12, 0, 0}, v, Symmetry::asymmetric);
      c.near(asym[0], 0.0, 1e-12, tag + " asymmetric phi1");
      c.near(asym[1], eps / 2 - 0.5, 1e-12, tag + " asymmetric phi2");
    }
  }
  // At eps = 0 the asymmetric values sit at (0, -1/2) while the symmetric
  // ones are (-1/4, -1/4), and any eps > 0 moves them continuously.
  const auto asym0 = xor_shapley({0.0, XorStructure::chain12, 0, 0}, Variant::conditional, Symmetry::asymmetric);
  const auto sym0 = xor_shapley({0.0, XorStructure::none, 0, 0}, Variant::conditional, Symmetry::symmetric);
  c.near(asym0[0], 0.0, 1e-12, "eps=0 asymmetric phi1");
  c.near(asym0[1], -0.5, 1e-12, "eps=0 asymmetric phi2");
  c.near(sym0[0], -0.25, 1e-12, "eps=0 symmetric phi1");
  c.near(sym0[1], -0.25, 1e-12, "eps=0 symmetric phi2");
  c.expect(std::abs(asym0[1] - sym0[1]) > 0.2, "no gap between asymmetric and symmetric at eps=0");
  return c.ok() ? "" : c.summary();
}

// ---- 4 ----------------------------------------------------------------------

std::string criterion4() {
  Check c;
  const auto f = TableModel::exclusive_or();
  for (const double eps : {0.0, 0.25, 0.5, 0.75}) {
    const auto table = xor_joint_table(eps);
    const DistributionModel model = table;
    for (const auto s : {XorStructure::none, XorStructure::chain12, XorStructure::chain21, XorStructure::confounder,
                         XorStructure::mutual}) {
      const auto g = xor_graph(s);
      const ChainGraph* gp = g ? &*g : nullptr;
      for (const auto v : kVariants) {
        if (v == Variant::causal && !gp) continue;
        for (const auto y : kSymmetries) {
          if (y == Symmetry::asymmetric && !gp) continue;
          for (const int x1 : {0, 1}) {
            for (const int x2 : {0, 1}) {
              const std::vector<double> x{double(x1), double(x2)};
              const auto want = xor_shapley({eps, s, x1, x2}, v, y);
              const auto name = "eps=" + std::to_string(eps) + " " + to_string(s) + "/" + to_string(v) + "/" +
                                to_string(y) + " at (" + std::to_string(x1) + "," + std::to_string(x2) + ")";
              const DiscreteValueFunction exact(table, gp, f, v, x);
              const auto re = shapley_values(exact, PermutationDistribution::exact(y, gp), {"x1", "x2"});
              c.near(re.features[0].phi, want[0], 1e-12, name + " exact phi1");
              c.near(re.features[1].phi, want[1], 1e-12, name + " exact phi2");
              if (x1 != 0 || x2 != 0) continue;
              const MonteCarloValueFunction mc(model, gp, f, v, x, SamplerConfig{50000, 77});
              const auto rm = shapley_values(mc, PermutationDistribution::exact(y, gp), {"x1", "x2"});
              for (int i = 0; i < 2; ++i) {
                c.near(rm.features[i].phi, want[i], 4 * rm.features[i].std_error + 1e-12,
                       name + " Monte Carlo phi" + std::to_string(i + 1));
              }
            }
          }
        }
      }
    }
  }
  return c.ok() ? "" : c.summary();
}

// ---- 5 ----------------------------------------------------------------------

AttributionReport exact_report(const JointTable& t, const ChainGraph* g, const TableModel& f, Variant v,
                               const std::vector<double>& x, Symmetry y) {
  const DiscreteValueFunction fn(t, g, f, v, x);
  return shapley_values(fn, PermutationDistribution::exact(y, g), FeatureSpace::anonymous(x.size()).names());
}

std::string criterion5() {
  Check c;
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 2 + rng() % 3;
    const auto t = testing::random_joint_table(n, rng);
    const auto f = testing::random_table_model(n, rng);
    const auto x = testing::random_binary_instance(n, rng);
    const auto space = binary_features(n);
    const auto tag = "trial " + std::to_string(trial);

    const auto conf = single_component_graph(space, true);
    const auto mutual = single_component_graph(space, false);
    for (const auto y : kSymmetries) {
      const auto a = exact_report(t, &conf, f, Variant::causal, x, y);
      const auto b = exact_report(t, &conf, f, Variant::marginal, x, y);
      c.expect(testing::max_abs_diff(testing::phis(a), testing::phis(b)) <= 1e-12, tag + " confounded != marginal");
      const auto d = exact_report(t, &mutual, f, Variant::causal, x, y);
      const auto e = exact_report(t, &mutual, f, Variant::conditional, x, y);
      c.expect(testing::max_abs_diff(testing::phis(d), testing::phis(e)) <= 1e-12,
               tag + " mutual != conditional");
    }

    // Random ordered partition with every component unconfounded.
    auto g = testing::random_graph(n, rng);
    std::vector<std::vector<std::size_t>> order;
    for (const auto& comp : g.components()) order.push_back(comp.members);
    const auto plain = build_chain_graph(space, order, std::vector<bool>(order.size(), false));
    const auto a = exact_report(t, &plain, f, Variant::causal, x, Symmetry::asymmetric);
    const auto b = exact_report(t, &plain, f, Variant::conditional, x, Symmetry::asymmetric);
    c.expect(testing::max_abs_diff(testing::phis(a), testing::phis(b)) <= 1e-12,
             tag + " asymmetric causal != asymmetric conditional");
  }
  return c.ok() ? "" : c.summary();
}

// ---- 6 ----------------------------------------------------------------------

std::vector<double> game_values(const testing::DiscreteOracle& oracle, std::size_t n) {
  std::vector<double> v(std::size_t{1} << n);
  for (FeatureMask s = 0; s < v.size(); ++s) v[s] = oracle.value(s);
  return v;
}

std::vector<std::vector<std::size_t>> all_orders(std::size_t n) {
  std::vector<std::size_t> o(n);
  std::iota(o.begin(), o.end(), 0);
  std::vector<std::vector<std::size_t>> out;
  do out.push_back(o);
  while (std::next_permutation(o.begin(), o.end()));
  return out;
}

std::string criterion6() {
  Check c;
  std::mt19937_64 rng(66);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 2 + rng() % 3;
    const auto t = testing::random_joint_table(n, rng);
    const auto f = testing::random_table_model(n, rng);
    const auto h = testing::random_table_model(n, rng);
    const auto g = testing::random_graph(n, rng);
    const auto x = testing::random_binary_instance(n, rng);
    const auto names = FeatureSpace::anonymous(n).names();
    const auto tag = "trial " + std::to_string(trial);

    for (const auto v : kVariants) {
      const testing::DiscreteOracle oracle(t, f, &g, v, x);
      const testing::TabulatedGame game(game_values(oracle, n));

      for (const auto y : kSymmetries) {
        // Efficiency.
        const DiscreteValueFunction fn(t, &g, f, v, x);
        const auto r = shapley_values(fn, PermutationDistribution::exact(y, &g), names);
        c.near(r.phi_sum(), r.fx - r.f0, 1e-12, tag + " efficiency");
        c.expect(testing::max_abs_diff(testing::phis(r), oracle.shapley(y == Symmetry::asymmetric)) <= 1e-12,
                 tag + " oracle mismatch");

        // Linearity in the predictor.
        const double a = 0.7, b = -1.3;
        std::vector<double> mix(f.outputs().size());
        for (std::size_t k = 0; k < mix.size(); ++k) mix[k] = a * f.outputs()[k] + b * h.outputs()[k];
        const TableModel fh(AssignmentIndex(std::vector<std::size_t>(n, 2)), mix);
        const DiscreteValueFunction fn_h(t, &g, h, v, x);
        const DiscreteValueFunction fn_mix(t, &g, fh, v, x);
        const auto rh = shapley_values(fn_h, PermutationDistribution::exact(y, &g), names);
        const auto rm = shapley_values(fn_mix, PermutationDistribution::exact(y, &g), names);
        for (std::size_t i = 0; i < n; ++i) {
          c.near(rm.features[i].phi, a * r.features[i].phi + b * rh.features[i].phi, 1e-12, tag + " linearity");
        }
      }

      // Telescoping: every permutation sums to v(N) - v(empty), bit for bit.
      ValueMemo memo(game);
      std::vector<std::pair<FeatureMask, FeatureMask>> requests;
      for (FeatureMask s = 0; s <= full_mask(n); ++s) requests.emplace_back(s, 0);
      const auto table = ValueTable::build(memo, requests);
      const double span = table.value(full_mask(n)).value - table.value(0).value;
      for (const auto& o : all_orders(n)) {
        const Permutation perm(o);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += contribution(perm, i, table).total;
        c.expect(sum == span, tag + " telescoping not bit-exact");
        c.expect(permutation_sum(perm, table) == span, tag + " permutation_sum not bit-exact");
      }

      // Null player: copy v(S) onto v(S + j) for a chosen j.
      const std::size_t j = rng() % n;
      auto values = game_values(oracle, n);
      for (FeatureMask s = 0; s < values.size(); ++s) {
        if (has_feature(s, j)) values[s] = values[s & ~feature_bit(j)];
      }
      const testing::TabulatedGame null_game(values);
      for (const auto y : kSymmetries) {
        const auto r = shapley_values(null_game, PermutationDistribution::exact(y, &g), names);
        c.expect(r.features[j].phi == 0.0, tag + " null player got " + std::to_string(r.features[j].phi));
      }

      // Relabeling: feature k of the relabeled game is feature sigma[k] of the original.
      std::vector<std::size_t> sigma(n);
      std::iota(sigma.begin(), sigma.end(), 0);
      std::shuffle(sigma.begin(), sigma.end(), rng);
      const auto original = game_values(oracle, n);
      std::vector<double> relabeled(original.size());
      for (FeatureMask s = 0; s < relabeled.size(); ++s) {
        FeatureMask back = 0;
        for (std::size_t k = 0; k < n; ++k) {
          if (has_feature(s, k)) back |= feature_bit(sigma[k]);
        }
        relabeled[s] = original[back];
      }
      const auto r0 = shapley_values(game, PermutationDistribution::exact(Symmetry::symmetric), names);
      const auto r1 = shapley_values(testing::TabulatedGame(relabeled),
                                     PermutationDistribution::exact(Symmetry::symmetric), names);
      for (std::size_t k = 0; k < n; ++k) {
        c.expect(r1.features[k].phi == r0.features[sigma[k]].phi, tag + " relabeling not exact");
      }
    }
  }
  return c.ok() ? "" : c.summary();
}

// ---- 7 ----------------------------------------------------------------------

GaussianModel random_gaussian(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index k = 0; k < a.cols(); ++k) a(r, k) = z(rng);
  }
  Eigen::MatrixXd cov = a * a.transpose() / static_cast<double>(n) + 0.3 * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd mu(n);
  for (Eigen::Index k = 0; k < mu.size(); ++k) mu(k) = z(rng);
  return GaussianModel(FeatureSpace::anonymous(n), mu, cov);
}

std::string criterion7() {
  Check c;
  std::mt19937_64 rng(77);
  std::normal_distribution<double> z;
  std::size_t records = 0;
  for (int run = 0; run < 100; ++run) {
    const std::size_t n = 2 + rng() % 3;
    const auto v = kVariants[run % 3];
    const auto tag = "run " + std::to_string(run);
    const SamplerConfig cfg{200, static_cast<std::uint64_t>(run)};

    std::optional<JointTable> table;
    std::optional<GaussianModel> gauss;
    std::optional<TableModel> tf;
    std::optional<LinearModel> lf;
    std::optional<DistributionModel> model;
    std::optional<ChainGraph> g;
    std::vector<double> x(n);
    const Predictor* f = nullptr;
    if (run % 2 == 0) {
      table = testing::random_joint_table(n, rng);
      tf = testing::random_table_model(n, rng);
      g = testing::random_graph(n, rng);
      x = testing::random_binary_instance(n, rng);
      model = *table;
      f = &*tf;
    } else {
      gauss = random_gaussian(n, rng);
      Eigen::VectorXd beta(n);
      for (std::size_t k = 0; k < n; ++k) {
        beta(static_cast<Eigen::Index>(k)) = z(rng);
        x[k] = z(rng);
      }
      lf = LinearModel(z(rng), beta);
      g = testing::random_graph(gauss->features(), rng);
      model = *gauss;
      f = &*lf;
    }
    const MonteCarloValueFunction fn(*model, &*g, *f, v, x, cfg);
    ValueMemo memo(fn);
    for (const auto& o : all_orders(n)) {
      const Permutation perm(o);
      const auto vt = ValueTable::build(memo, permutation_requests(perm, true));
      for (std::size_t i = 0; i < n; ++i) {
        const auto rec = decompose_effects(perm, i, vt);
        ++records;
        c.expect(rec.direct + rec.indirect == rec.total, tag + " split not exact");
        c.expect(rec.total == contribution(perm, i, vt).total, tag + " total differs from contribution");
        if (v == Variant::marginal) c.expect(rec.indirect == 0.0, tag + " marginal indirect nonzero");
      }
    }
    const auto r = shapley_values(fn, PermutationDistribution::exact(Symmetry::symmetric, &*g),
                                  FeatureSpace::anonymous(n).names(), {true, 1});
    for (const auto& fa : r.features) {
      c.expect(fa.direct + fa.indirect == fa.phi, tag + " report split not exact");
      if (v == Variant::marginal) c.expect(fa.indirect == 0.0, tag + " report marginal indirect nonzero");
    }
  }
  c.expect(records > 100, "too few records");
  return c.ok() ? "" : c.summary();
}

// ---- 8 ----------------------------------------------------------------------

std::string criterion8(std::string& detail) {
  Check c;
  std::mt19937_64 rng(88);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t n = 2 + trial % 5;
    const auto m = random_gaussian(n, rng);
    const std::size_t k = std::min<std::size_t>(1 + trial % 2, n - 1);
    std::vector<std::size_t> feats(n);
    std::iota(feats.begin(), feats.end(), 0);
    std::shuffle(feats.begin(), feats.end(), rng);
    const std::vector<std::size_t> cond(feats.begin(), feats.begin() + static_cast<std::ptrdiff_t>(k));
    std::vector<std::pair<std::size_t, double>> given;
    for (const auto f : cond) {
      const double sd = std::sqrt(m.cov(f, f));
      given.emplace_back(f, m.mean()(static_cast<Eigen::Index>(f)) + 0.5 * z(rng) * sd);
    }
    const auto cg = condition_gaussian(m, given);

    // Simulate through our own Cholesky factor and keep samples whose
    // conditioning coordinates land in a slab of half-width 0.05 sd.
    const Eigen::LLT<Eigen::MatrixXd> llt(m.covariance());
    const Eigen::MatrixXd l = llt.matrixL();
    std::vector<Eigen::VectorXd> kept;
    Eigen::VectorXd e(n);
    for (int s = 0; s < 1000000; ++s) {
      for (std::size_t q = 0; q < n; ++q) e(static_cast<Eigen::Index>(q)) = z(rng);
      const Eigen::VectorXd xs = m.mean() + l * e;
      bool in = true;
      for (const auto& [f, val] : given) {
        in = in && std::abs(xs(static_cast<Eigen::Index>(f)) - val) <= 0.05 * std::sqrt(m.cov(f, f));
      }
      if (in) kept.push_back(xs);
    }
    const auto tag = "trial " + std::to_string(trial);
    detail += (detail.empty() ? "slab samples " : ", ") + std::to_string(kept.size());
    c.expect(kept.size() >= 100, tag + " too few slab samples");
    if (kept.size() < 2) continue;
    const double cnt = static_cast<double>(kept.size());

    // Within the slab X_c still varies; E[X_t | slab] = mu_t + G (E[X_c | slab] - mu_c)
    // and Var(X_t | slab) = Sigma_t|c + G Var(X_c | slab) G^T hold exactly, so
    // the oracle uses the empirical slab moments of X_c.
    const auto idx = [](std::size_t f) { return static_cast<Eigen::Index>(f); };
    Eigen::VectorXd cmean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    for (const auto& xs : kept) {
      for (std::size_t q = 0; q < k; ++q) cmean(idx(q)) += xs(idx(cond[q])) / cnt;
    }
    Eigen::MatrixXd ccov = Eigen::MatrixXd::Zero(idx(k), idx(k));
    for (const auto& xs : kept) {
      for (std::size_t p = 0; p < k; ++p) {
        for (std::size_t q = 0; q < k; ++q) {
          ccov(idx(p), idx(q)) += (xs(idx(cond[p])) - cmean(idx(p))) * (xs(idx(cond[q])) - cmean(idx(q))) / (cnt - 1);
        }
      }
    }
    const GaussianConditioner gc(m, cg.features, cond);
    const Eigen::VectorXd want_mean = gc.conditional_mean(cmean);
    const Eigen::MatrixXd want_cov = cg.covariance + gc.gain() * ccov * gc.gain().transpose();
    for (std::size_t t = 0; t < cg.features.size(); ++t) {
      const auto f = cg.features[t];
      double mean = 0.0;
      for (const auto& xs : kept) mean += xs(idx(f)) / cnt;
      double var = 0.0;
      for (const auto& xs : kept) var += (xs(idx(f)) - mean) * (xs(idx(f)) - mean) / (cnt - 1);
      const double w = want_cov(idx(t), idx(t));
      c.near(mean, want_mean(idx(t)), 4 * std::sqrt(w / cnt), tag + " mean of x" + std::to_string(f));
      c.near(var, w, 4 * w * std::sqrt(2.0 / (cnt - 1)), tag + " variance of x" + std::to_string(f));
      // The library's own conditional mean at the slab centre.
      Eigen::VectorXd centre(idx(k));
      for (std::size_t q = 0; q < k; ++q) centre(idx(q)) = given[q].second;
      c.near(gc.conditional_mean(centre)(idx(t)), cg.mean(idx(t)), 1e-9, tag + " conditioner disagrees");
    }

    // The conditional covariance does not depend on the conditioning values.
    auto shifted = given;
    for (auto& [f, val] : shifted) val += 3.0 * z(rng);
    const auto cg2 = condition_gaussian(m, shifted);
    c.expect(cg2.covariance == cg.covariance, tag + " covariance depends on the conditioning values");
  }
  return c.ok() ? "" : c.summary();
}

// ---- 9 and 10: through the command-line entry point -------------------------

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "causal-shap");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<AttributionReport> parse_reports(const std::string& json_text) {
  std::vector<AttributionReport> out;
  for (const auto& r : nlohmann::json::parse(json_text)) out.push_back(report_from_json(r));
  return out;
}

std::string read_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) all += f.filename().string() + "\n" + testing::read_file(f);
  return all;
}

// Root {x1, x2} shares a latent cause; {x3, x4, x5} interact mutually and
// depend on the root; {x6, x7} share a latent cause and depend on the middle.
void write_sem(const testing::TempDir& dir) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> z;
  std::ostringstream csv;
  csv << "x1,x2,x3,x4,x5,x6,x7\n";
  for (int r = 0; r < 4000; ++r) {
    const double u = z(rng);
    const double x1 = z(rng) + 0.7 * u, x2 = z(rng) + 0.7 * u;
    const double w = z(rng);
    const double x3 = 0.9 * x1 + 0.4 * x2 + 0.5 * w + 0.5 * z(rng);
    const double x4 = 0.5 * x1 + 0.8 * x2 + 0.5 * w + 0.5 * z(rng);
    const double x5 = 0.7 * x1 - 0.3 * x2 + 0.5 * w + 0.5 * z(rng);
    const double v = z(rng);
    const double x6 = 0.6 * x3 + 0.5 * x4 + 0.4 * v + 0.4 * z(rng);
    const double x7 = 0.5 * x4 + 0.6 * x5 + 0.4 * v + 0.4 * z(rng);
    csv << x1 << ',' << x2 << ',' << x3 << ',' << x4 << ',' << x5 << ',' << x6 << ',' << x7 << '\n';
  }
  testing::write_file(dir / "data.csv", csv.str());
  const auto g = build_chain_graph(FeatureSpace::continuous({"x1", "x2", "x3", "x4", "x5", "x6", "x7"}),
                                   {{0, 1}, {2, 3, 4}, {5, 6}}, {true, false, true});
  testing::write_file(dir / "graph.json", dump_graph(g));
  std::vector<std::size_t> rows(50);
  std::iota(rows.begin(), rows.end(), 0);
  const nlohmann::json cfg = {
      {"graph", "graph.json"},
      {"data", "data.csv"},
      {"model", {{"type", "linear"}, {"intercept", 0.5}, {"coefficients", {0.2, 0.2, 1.0, 1.0, 1.0, 1.0, 1.0}}}},
      {"instances", {{"rows", rows}}},
      {"n_samples", 2000},
      {"seed", 31},
      {"threads", 4}};
  testing::write_file(dir / "config.json", cfg.dump(2));
}

double root_share(const AttributionReport& r) {
  double root = 0.0, all = 0.0;
  for (std::size_t i = 0; i < r.features.size(); ++i) {
    all += std::abs(r.features[i].phi);
    if (i < 2) root += std::abs(r.features[i].phi);
  }
  return all > 0 ? root / all : 0.0;
}

std::string criterion9(std::string& detail) {
  Check c;
  testing::TempDir dir;
  write_sem(dir);
  const auto cfg = (dir / "config.json").string();
  const auto run = [&](const std::string& cmd, const std::string& variant, const std::string& symmetry,
                       const std::string& out) {
    return run_cli({cmd, "--config", cfg, "--variant", variant, "--symmetry", symmetry, "--n-permutations", "exact",
                "--output", (dir / out).string(), "--format", "json"});
  };
  const auto a1 = run("decompose", "causal", "asymmetric", "asym1");
  const auto a2 = run("decompose", "causal", "asymmetric", "asym2");
  const auto m = run("explain", "marginal", "symmetric", "marg");
  c.expect(a1.code == 0 && a2.code == 0 && m.code == 0, "command failed: " + a1.err + m.err);
  if (!c.ok()) return c.summary();

  c.expect(a1.out == a2.out, "stdout differs between reruns");
  c.expect(read_dir(dir / "asym1") == read_dir(dir / "asym2"), "report files differ between reruns");

  const auto asym = parse_reports(a1.out);
  const auto marg = parse_reports(m.out);
  c.expect(asym.size() == 50 && marg.size() == 50, "expected 50 reports");
  if (!c.ok()) return c.summary();

  // E f(X) under the fitted model is the linear model at the sample mean.
  const auto data = read_csv(dir / "data.csv", FeatureSpace::continuous({"x1", "x2", "x3", "x4", "x5", "x6", "x7"}));
  const std::vector<double> beta{0.2, 0.2, 1.0, 1.0, 1.0, 1.0, 1.0};
  double ef = 0.5;
  for (std::size_t k = 0; k < 7; ++k) ef += beta[k] * data.rows.col(static_cast<Eigen::Index>(k)).mean();

  int wins = 0;
  double root_indirect = 0.0;
  for (std::size_t k = 0; k < 50; ++k) {
    for (const auto* r : {&asym[k], &marg[k]}) {
      c.near(r->phi_sum(), r->fx - r->f0, 1e-9 * (1 + std::abs(r->fx)), "efficiency against the estimated baseline");
      c.near(r->phi_sum(), r->fx - ef, 4 * r->f0_std_error, "efficiency against the exact baseline");
    }
    for (const auto& f : asym[k].features) c.expect(f.direct + f.indirect == f.phi, "decomposition split");
    root_indirect += std::abs(asym[k].features[0].indirect) + std::abs(asym[k].features[1].indirect);
    if (root_share(asym[k]) > root_share(marg[k])) ++wins;
  }
  // One-sided sign test at the 5% level: P(Bin(50, 1/2) >= 32) = 0.032.
  c.expect(wins >= 32, "sign test: root share grew in only " + std::to_string(wins) + " of 50 instances");
  c.expect(root_indirect > 0.0, "root component carries no indirect effect");
  detail = "root share larger in " + std::to_string(wins) + "/50 instances";
  return c.ok() ? "" : c.summary();
}

std::string criterion10() {
  Check c;
  // Config round trip.
  const auto doc = nlohmann::json::parse(R"({
    "graph": "/g.json", "data": "/d.csv",
    "model": {"type": "external", "command": "run-model", "timeout_s": 5, "batch_size": 64},
    "instances": {"rows": [1, 2], "vectors": [[1, "a"]]}, "variant": "conditional", "symmetry": "asymmetric",
    "n_samples": 77, "n_permutations": 12, "seed": 5, "decompose": true, "output": "/out",
    "format": "json", "regularization": 0.001, "antithetic": true, "threads": 3})");
  const auto conf = cli::config_from_json(doc);
  c.expect(cli::config_from_json(cli::config_to_json(conf)) == conf, "config round trip");

  // Predictor protocol.
  const std::string tp = TEST_PREDICTOR_PATH;
  const auto command = [&](const std::string& args) { return "'" + tp + "' " + args; };
  RowMatrix rows(25, 2);
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    rows(r, 0) = 0.1 * static_cast<double>(r);
    rows(r, 1) = 1.0 / (1.0 + static_cast<double>(r));
  }
  const cli::ExternalPredictor whole(command("linear 0.5 2 -1"), 2);
  const auto all = whole.predict(rows);
  for (const std::size_t batch : {1, 4, 24, 25, 100}) {
    const cli::ExternalPredictor split(command("linear 0.5 2 -1"), 2, 60.0, batch);
    c.expect(split.predict(rows) == all, "batch size " + std::to_string(batch) + " changes predictions");
  }
  const auto throws_predictor_error = [&](const std::string& args) {
    try {
      const cli::ExternalPredictor p(command(args), 2);
      p.predict(rows);
    } catch (const PredictorError&) {
      return true;
    } catch (...) {
    }
    return false;
  };
  c.expect(throws_predictor_error("malformed"), "malformed response accepted");
  c.expect(throws_predictor_error("short"), "short response accepted");
  c.expect(throws_predictor_error("crash"), "crash not reported");

  // End-to-end runs, atomic output and exit codes.
  testing::TempDir dir;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  std::ostringstream csv;
  csv << "a,b\n";
  for (int r = 0; r < 100; ++r) {
    const double a = z(rng);
    csv << a << ',' << 0.5 * a + z(rng) << '\n';
  }
  testing::write_file(dir / "data.csv", csv.str());
  testing::write_file(dir / "graph.json", R"({"features":[{"name":"a"},{"name":"b"}],
    "components":[{"members":["a"]},{"members":["b"]}]})");
  const auto write_cfg = [&](const nlohmann::json& model, const std::string& out) {
    const nlohmann::json cfg = {{"graph", "graph.json"},          {"data", "data.csv"}, {"model", model},
                                {"instances", {{"rows", {0, 1}}}}, {"n_samples", 200},  {"output", out}};
    testing::write_file(dir / "config.json", cfg.dump());
    return (dir / "config.json").string();
  };
  const auto ok_cfg = write_cfg({{"type", "external"}, {"command", command("linear 0 1 1")}}, "good");
  const auto good = run_cli({"explain", "--config", ok_cfg});
  c.expect(good.code == 0, "explain failed: " + good.err);
  c.expect(fs::exists(dir / "good" / "report_0.csv") && fs::exists(dir / "good" / "report_1.json") &&
               fs::exists(dir / "good" / "sina.csv"),
           "report files missing");
  const auto inline_cfg = write_cfg({{"type", "linear"}, {"coefficients", {1.0, 1.0}}}, "inline");
  c.expect(run_cli({"explain", "--config", inline_cfg}).code == 0, "inline explain failed");
  c.expect(testing::read_file(dir / "good" / "report_0.csv") == testing::read_file(dir / "inline" / "report_0.csv"),
           "external and inline models disagree");

  const auto crash_cfg = write_cfg({{"type", "external"}, {"command", command("crash")}}, "crashed");
  c.expect(run_cli({"explain", "--config", crash_cfg}).code == 3, "predictor crash is not exit code 3");
  c.expect(!fs::exists(dir / "crashed"), "failed run left output behind");
  const auto bad_cfg = write_cfg({{"type", "linear"}, {"coefficients", {1.0}}}, "bad");
  c.expect(run_cli({"explain", "--config", bad_cfg}).code == 2, "coefficient mismatch is not exit code 2");
  c.expect(!fs::exists(dir / "bad"), "invalid run left output behind");
  const auto flag = run_cli({"explain", "--config", ok_cfg, "--variant", "sideways"});
  c.expect(flag.code == 2 && flag.err.find("variant") != std::string::npos, "bad flag not reported as exit code 2");
  c.expect(run_cli({"explain", "--config", (dir / "nope.json").string()}).code == 2, "missing config not exit code 2");

  // A file set whose second target cannot be written leaves nothing behind.
  fs::create_directories(dir / "atomic");
  testing::write_file(dir / "atomic" / "blocker", "a file, not a directory");
  cli::AtomicFileSet set;
  set.add(dir / "atomic" / "first.txt", "one");
  set.add(dir / "atomic" / "blocker" / "second.txt", "two");
  bool threw = false;
  try {
    set.commit();
  } catch (const ValidationError&) {
    threw = true;
  }
  c.expect(threw, "atomic commit did not fail");
  c.expect(!fs::exists(dir / "atomic" / "first.txt") && !fs::exists(dir / "atomic" / "first.txt.tmp"),
           "atomic commit left partial output");
  return c.ok() ? "" : c.summary();
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::string title;
    double budget_s;  // 0: no runtime limit
    std::function<std::string(std::string&)> run;
  };
  const auto plain = [](std::string (*f)()) { return [f](std::string&) { return f(); }; };
  const std::vector<Criterion> criteria = {
      {1, "toy table patterns and closed forms", 1.0, plain(criterion1)},
      {2, "toy table through Monte Carlo values", 30.0, criterion2},
      {3, "XOR theoretical values and the eps=0 discontinuity", 0.0, plain(criterion3)},
      {4, "XOR engine agreement, exact and Monte Carlo", 0.0, plain(criterion4)},
      {5, "reductions to marginal and conditional", 0.0, plain(criterion5)},
      {6, "Shapley axioms", 0.0, plain(criterion6)},
      {7, "direct + indirect == total", 0.0, plain(criterion7)},
      {8, "conditional Gaussian against simulation", 0.0, criterion8},
      {9, "7-feature end-to-end substitute", 0.0, criterion9},
      {10, "command-line contract", 10.0, plain(criterion10)},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    std::string detail, error;
    const auto start = std::chrono::steady_clock::now();
    try {
      error = c.run(detail);
    } catch (const std::exception& e) {
      error = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (error.empty() && c.budget_s > 0 && secs > c.budget_s) {
      error = "took " + std::to_string(secs) + " s, limit " + std::to_string(c.budget_s) + " s";
    }
    std::ostringstream line;
    line.precision(3);
    line << (error.empty() ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.title << " (" << std::fixed
         << secs << " s)";
    if (!detail.empty()) line << " [" << detail << "]";
    if (!error.empty()) line << ": " << error;
    std::cout << line.str() << std::endl;
    failed += error.empty() ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
