#include "causal_shap/analytic.hpp"

#include <cmath>

#include "causal_shap/errors.hpp"

namespace cshap {

std::string to_string(ToyStructure s) {
  switch (s) {
    case ToyStructure::chain: return "chain";
    case ToyStructure::fork: return "fork";
    case ToyStructure::confounder: return "confounder";
    case ToyStructure::cycle: return "cycle";
  }
  return "unknown";
}

ToyStructure parse_toy_structure(std::string_view text) {
  if (text == "chain") return ToyStructure::chain;
  if (text == "fork") return ToyStructure::fork;
  if (text == "confounder") return ToyStructure::confounder;
  if (text == "cycle") return ToyStructure::cycle;
  throw ValidationError("structure must be one of chain, fork, confounder, cycle; got '" + std::string(text) + "'");
}

ToyParams ToyParams::standardized(double alpha, double beta1, double beta2, double x1, double x2, double xbar1,
                                  double xbar2) {
  return ToyParams{alpha, alpha, beta1, beta2, xbar1, xbar2, x1, x2};
}

namespace {

ToyParams swapped(const ToyParams& p) {
  return ToyParams{p.alpha2, p.alpha1, p.beta2, p.beta1, p.xbar2, p.xbar1, p.x2, p.x1};
}

// E[X_other | do(x_first)] for a permutation that places `first` first, on
// the chain, confounder or cycle.
double expected_other(ToyStructure structure, Variant variant, std::size_t first, const ToyParams& p) {
  const double xbar_other = first == 0 ? p.xbar2 : p.xbar1;
  const double conditional =
      first == 0 ? p.xbar2 + p.alpha1 * (p.x1 - p.xbar1) : p.xbar1 + p.alpha2 * (p.x2 - p.xbar2);
  switch (variant) {
    case Variant::marginal: return xbar_other;
    case Variant::conditional: return conditional;
    case Variant::causal:
      return toy_interventional_reduction(structure, first).reduces_to == Reduction::conditional ? conditional
                                                                                                 : xbar_other;
  }
  return xbar_other;
}

// Contributions along one permutation of the two features.
ToyAttribution along(ToyStructure structure, Variant variant, std::size_t first, const ToyParams& p) {
  const std::size_t second = 1 - first;
  const double beta[2] = {p.beta1, p.beta2};
  const double x[2] = {p.x1, p.x2};
  const double xbar[2] = {p.xbar1, p.xbar2};
  const double moved = expected_other(structure, variant, first, p);
  ToyAttribution out;
  out[first].direct = beta[first] * (x[first] - xbar[first]);
  out[first].indirect = beta[second] * (moved - xbar[second]);
  out[second].direct = beta[second] * (x[second] - moved);
  out[second].indirect = 0.0;
  for (auto& e : out) e.total = e.direct + e.indirect;
  return out;
}

}  // namespace

ReductionRule toy_interventional_reduction(ToyStructure structure, std::size_t feature) {
  if (feature > 1) throw ValidationError("toy structures have two features");
  switch (structure) {
    case ToyStructure::chain:
      return feature == 0 ? ReductionRule{Reduction::conditional, 2} : ReductionRule{Reduction::marginal, 3};
    case ToyStructure::fork:
      return feature == 1 ? ReductionRule{Reduction::conditional, 2} : ReductionRule{Reduction::marginal, 3};
    case ToyStructure::confounder: return {Reduction::marginal, 3};
    case ToyStructure::cycle: return {Reduction::conditional, 2};
  }
  return {Reduction::marginal, 3};
}

ToyAttribution toy_shapley(ToyStructure structure, Variant variant, Symmetry symmetry, const ToyParams& params) {
  if (structure == ToyStructure::fork) {
    auto r = toy_shapley(ToyStructure::chain, variant, symmetry, swapped(params));
    std::swap(r[0], r[1]);
    return r;
  }
  if (variant == Variant::marginal) {
    ToyAttribution out;
    out[0].direct = out[0].total = params.beta1 * (params.x1 - params.xbar1);
    out[1].direct = out[1].total = params.beta2 * (params.x2 - params.xbar2);
    return out;
  }
  const auto forward = along(structure, variant, 0, params);
  if (symmetry == Symmetry::asymmetric && structure == ToyStructure::chain) return forward;
  const auto backward = along(structure, variant, 1, params);
  ToyAttribution out;
  for (std::size_t i = 0; i < 2; ++i) {
    out[i].direct = 0.5 * (forward[i].direct + backward[i].direct);
    out[i].indirect = 0.5 * (forward[i].indirect + backward[i].indirect);
    out[i].total = out[i].direct + out[i].indirect;
  }
  return out;
}

GaussianModel toy_gaussian(const ToyParams& p) {
  if (p.alpha1 != p.alpha2) throw ValidationError("the Gaussian realization needs alpha1 == alpha2");
  if (!(std::abs(p.alpha1) < 1.0)) throw ValidationError("the Gaussian realization needs |alpha| < 1");
  Eigen::Vector2d mean(p.xbar1, p.xbar2);
  Eigen::Matrix2d cov;
  cov << 1.0, p.alpha1, p.alpha1, 1.0;
  return GaussianModel(FeatureSpace::anonymous(2), mean, cov);
}

ChainGraph toy_graph(ToyStructure structure) {
  const auto space = FeatureSpace::anonymous(2);
  switch (structure) {
    case ToyStructure::chain: return build_chain_graph(space, {{0}, {1}}, {true, true});
    case ToyStructure::fork: return build_chain_graph(space, {{1}, {0}}, {true, true});
    case ToyStructure::confounder: return single_component_graph(space, true);
    case ToyStructure::cycle: return single_component_graph(space, false);
  }
  throw ValidationError("unknown toy structure");
}

LinearModel toy_linear_model(const ToyParams& p) { return LinearModel(0.0, Eigen::Vector2d(p.beta1, p.beta2)); }

// ------------------------------------------------------------------ XOR

std::string to_string(XorStructure s) {
  switch (s) {
    case XorStructure::none: return "none";
    case XorStructure::chain12: return "chain12";
    case XorStructure::chain21: return "chain21";
    case XorStructure::confounder: return "confounder";
    case XorStructure::mutual: return "mutual";
  }
  return "unknown";
}

XorStructure parse_xor_structure(std::string_view text) {
  if (text == "none") return XorStructure::none;
  if (text == "chain12" || text == "chain-12") return XorStructure::chain12;
  if (text == "chain21" || text == "chain-21") return XorStructure::chain21;
  if (text == "confounder") return XorStructure::confounder;
  if (text == "mutual") return XorStructure::mutual;
  throw ValidationError("structure must be one of none, chain12, chain21, confounder, mutual; got '" +
                        std::string(text) + "'");
}

JointTable xor_joint_table(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ValidationError("epsilon must lie in [0, 1)");
  const double same = 0.25 * (1.0 + epsilon);
  const double differ = 0.25 * (1.0 - epsilon);
  return JointTable(binary_features(2), {same, differ, differ, same});
}

std::optional<ChainGraph> xor_graph(XorStructure structure) {
  const auto space = binary_features(2);
  switch (structure) {
    case XorStructure::none: return std::nullopt;
    case XorStructure::chain12: return build_chain_graph(space, {{0}, {1}}, {true, true});
    case XorStructure::chain21: return build_chain_graph(space, {{1}, {0}}, {true, true});
    case XorStructure::confounder: return single_component_graph(space, true);
    case XorStructure::mutual: return single_component_graph(space, false);
  }
  return std::nullopt;
}

std::array<double, 2> xor_shapley(const XorSpec& spec, Variant variant, Symmetry symmetry) {
  if (!(spec.epsilon >= 0.0 && spec.epsilon < 1.0)) throw ValidationError("epsilon must lie in [0, 1)");
  if ((spec.x1 != 0 && spec.x1 != 1) || (spec.x2 != 0 && spec.x2 != 1)) {
    throw ValidationError("XOR instance values must be 0 or 1");
  }
  if (variant == Variant::causal && spec.structure == XorStructure::none) {
    throw ValidationError("the causal variant needs an assumed structure, got 'none'");
  }
  const double eps = spec.epsilon;
  auto f = [](int a, int b) { return static_cast<double>(a ^ b); };
  auto p = [eps](int a, int b) { return 0.25 * (a == b ? 1.0 + eps : 1.0 - eps); };
  // Both marginals are uniform, so P(other = b | known = a) = 2 p(a, b).
  auto given = [&](int a, int b) { return 2.0 * p(a, b); };

  // Whether fixing feature k moves the distribution of the other one.
  auto conditions = [&](std::size_t k) {
    switch (variant) {
      case Variant::marginal: return false;
      case Variant::conditional: return true;
      case Variant::causal:
        switch (spec.structure) {
          case XorStructure::chain12: return k == 0;
          case XorStructure::chain21: return k == 1;
          case XorStructure::confounder: return false;
          case XorStructure::mutual: return true;
          case XorStructure::none: break;
        }
    }
    return false;
  };

  const int x1 = spec.x1, x2 = spec.x2;
  double v_empty = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) v_empty += p(a, b) * f(a, b);
  }
  double v1 = 0.0, v2 = 0.0;
  for (int b = 0; b < 2; ++b) v1 += (conditions(0) ? given(x1, b) : 0.5) * f(x1, b);
  for (int a = 0; a < 2; ++a) v2 += (conditions(1) ? given(x2, a) : 0.5) * f(a, x2);
  const double v_full = f(x1, x2);

  const std::array<double, 2> forward = {v1 - v_empty, v_full - v1};   // order (1, 2)
  const std::array<double, 2> backward = {v_full - v2, v2 - v_empty};  // order (2, 1)
  if (symmetry == Symmetry::asymmetric) {
    if (spec.structure == XorStructure::chain12) return forward;
    if (spec.structure == XorStructure::chain21) return backward;
  }
  return {0.5 * (forward[0] + backward[0]), 0.5 * (forward[1] + backward[1])};
}

}  // namespace cshap
