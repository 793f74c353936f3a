#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "causal_shap/chain_graph.hpp"
#include "causal_shap/conditioning.hpp"
#include "causal_shap/gaussian_model.hpp"
#include "causal_shap/joint_table.hpp"
#include "causal_shap/predictor.hpp"
#include "causal_shap/shapley.hpp"

namespace cshap {

// Two-feature causal structures: chain X1 -> X2, fork X2 -> X1, a confounded
// pair and a pair with mutual interaction.
enum class ToyStructure { chain, fork, confounder, cycle };

std::string to_string(ToyStructure s);
ToyStructure parse_toy_structure(std::string_view text);

// f(x) = beta1 x1 + beta2 x2 with E[X_i] = xbar_i and
// E[X2 | x1] = xbar2 + alpha1 (x1 - xbar1), E[X1 | x2] = xbar1 + alpha2 (x2 - xbar2).
struct ToyParams {
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double xbar1 = 0.0;
  double xbar2 = 0.0;
  double x1 = 0.0;
  double x2 = 0.0;

  // Unit variances and covariance alpha, so both slopes equal alpha.
  static ToyParams standardized(double alpha, double beta1, double beta2, double x1, double x2, double xbar1 = 0.0,
                                double xbar2 = 0.0);
};

struct EffectSplit {
  double direct = 0.0;
  double indirect = 0.0;
  double total = 0.0;
};

using ToyAttribution = std::array<EffectSplit, 2>;

ToyAttribution toy_shapley(ToyStructure structure, Variant variant, Symmetry symmetry, const ToyParams& params);

enum class Reduction { conditional, marginal };

struct ReductionRule {
  Reduction reduces_to;
  int rule;  // do-calculus rule that licenses the rewrite
};

// What E[X_other | do(x_feature)] becomes in observational terms (feature is 0 or 1).
ReductionRule toy_interventional_reduction(ToyStructure structure, std::size_t feature);

// Gaussian realization of a toy structure (needs alpha1 == alpha2, |alpha| < 1).
GaussianModel toy_gaussian(const ToyParams& params);
ChainGraph toy_graph(ToyStructure structure);
LinearModel toy_linear_model(const ToyParams& params);

enum class XorStructure { none, chain12, chain21, confounder, mutual };

std::string to_string(XorStructure s);
XorStructure parse_xor_structure(std::string_view text);

// Binary pair with p00 = p11 = (1+eps)/4, p01 = p10 = (1-eps)/4 explained
// through f(x1, x2) = x1 XOR x2.
struct XorSpec {
  double epsilon = 0.0;
  XorStructure structure = XorStructure::none;
  int x1 = 0;
  int x2 = 0;
};

std::array<double, 2> xor_shapley(const XorSpec& spec, Variant variant, Symmetry symmetry);

JointTable xor_joint_table(double epsilon);
// No graph for XorStructure::none.
std::optional<ChainGraph> xor_graph(XorStructure structure);

}  // namespace cshap
