#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "causal_shap/feature_space.hpp"

namespace cshap {

// Arrangement of {0, ..., n-1}.
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<std::size_t> order);
  static Permutation identity(std::size_t n);

  std::size_t size() const { return order_.size(); }
  std::size_t operator[](std::size_t k) const { return order_[k]; }
  const std::vector<std::size_t>& order() const { return order_; }
  std::size_t position_of(std::size_t feature) const { return position_.at(feature); }
  // Features strictly before `feature`.
  FeatureMask predecessors(std::size_t feature) const;

  bool operator==(const Permutation& o) const { return order_ == o.order_; }

 private:
  std::vector<std::size_t> order_;
  std::vector<std::size_t> position_;
};

// Features on an equal footing; `confounded` decides whether interventions on
// some members leave the others untouched.
struct ChainComponent {
  std::vector<std::size_t> members;
  bool confounded = true;
  std::vector<std::size_t> parents;

  bool operator==(const ChainComponent&) const = default;
};

class ChainGraph {
 public:
  // Validates the partition and the acyclicity of the component DAG.
  ChainGraph(FeatureSpace space, std::vector<ChainComponent> components,
             bool explicit_parents = true);

  const FeatureSpace& features() const { return space_; }
  std::size_t num_features() const { return space_.size(); }
  const std::vector<ChainComponent>& components() const { return components_; }
  std::size_t num_components() const { return components_.size(); }
  std::size_t component_of(std::size_t feature) const { return component_of_.at(feature); }
  // Kahn order, ties broken by listed order.
  const std::vector<std::size_t>& topological_order() const { return topo_; }

  FeatureMask component_mask(std::size_t c) const { return component_masks_.at(c); }
  FeatureMask parent_mask(std::size_t c) const { return parent_masks_.at(c); }
  // Features of every strict ancestor component of `feature`'s component.
  FeatureMask must_precede(std::size_t feature) const { return precede_.at(feature); }
  bool is_strict_ancestor(std::size_t a, std::size_t b) const;

  // Whether parent sets were given explicitly (kept for file round trips).
  bool has_explicit_parents() const { return explicit_parents_; }

  bool operator==(const ChainGraph& o) const {
    return space_ == o.space_ && components_ == o.components_;
  }

 private:
  FeatureSpace space_;
  std::vector<ChainComponent> components_;
  bool explicit_parents_;
  std::vector<std::size_t> component_of_;
  std::vector<std::size_t> topo_;
  std::vector<FeatureMask> component_masks_;
  std::vector<FeatureMask> parent_masks_;
  std::vector<std::vector<bool>> ancestor_;  // ancestor_[a][b]: a strict ancestor of b
  std::vector<FeatureMask> precede_;
};

// Builds the graph from an ordered partial order. Without explicit parents,
// every earlier component is a parent of every later one.
ChainGraph build_chain_graph(const FeatureSpace& space,
                             const std::vector<std::vector<std::size_t>>& partial_order,
                             const std::vector<bool>& confounding,
                             const std::optional<std::vector<std::vector<std::size_t>>>&
                                 explicit_parents = std::nullopt);

ChainGraph build_chain_graph(std::size_t n,
                             const std::vector<std::vector<std::size_t>>& partial_order,
                             const std::vector<bool>& confounding,
                             const std::optional<std::vector<std::vector<std::size_t>>>&
                                 explicit_parents = std::nullopt);

// Single component over all features.
ChainGraph single_component_graph(const FeatureSpace& space, bool confounded);

// A fixed subset of features with their instance values.
class Coalition {
 public:
  Coalition(FeatureMask members, std::span<const double> instance);

  std::size_t num_features() const { return values_.size(); }
  FeatureMask members() const { return members_; }
  FeatureMask complement() const { return full_mask(values_.size()) & ~members_; }
  bool contains(std::size_t i) const { return has_feature(members_, i); }
  double value(std::size_t i) const;
  // Writes x_S into `row`, leaving other entries untouched.
  void fill(std::span<double> row) const;

 private:
  FeatureMask members_;
  std::vector<double> values_;
};

struct Factor {
  std::size_t component = 0;
  bool confounded = true;
  std::vector<std::size_t> targets;          // component members still random
  std::vector<std::size_t> sampled_parents;  // parent features drawn earlier
  std::vector<std::size_t> fixed_parents;    // parent features in the coalition
  std::vector<std::size_t> fixed_within;     // coalition members of the component (non-confounded only)

  // Sorted union of fixed_parents and fixed_within.
  std::vector<std::size_t> fixed_conditioning() const;
};

// Factorization of P(X_out | do(x_in)), one factor per component in topological order.
struct FactorPlan {
  FeatureMask coalition = 0;
  std::vector<Factor> factors;

  FeatureMask sampled() const;
};

FactorPlan intervention_factorization(const ChainGraph& graph, FeatureMask coalition);
inline FactorPlan intervention_factorization(const ChainGraph& graph, const Coalition& coalition) {
  return intervention_factorization(graph, coalition.members());
}

bool is_consistent_permutation(const ChainGraph& graph, const Permutation& perm);

// Graph file format.
nlohmann::json graph_to_json(const ChainGraph& graph);
ChainGraph graph_from_json(const nlohmann::json& doc);
ChainGraph load_graph(const std::filesystem::path& path);
std::string dump_graph(const ChainGraph& graph);

}  // namespace cshap
