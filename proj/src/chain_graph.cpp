#include "causal_shap/chain_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <queue>
#include <sstream>

#include "causal_shap/errors.hpp"

namespace cshap {

namespace {

std::string component_label(std::size_t c) { return "component " + std::to_string(c); }

}  // namespace

// ---------------------------------------------------------------- Permutation

Permutation::Permutation(std::vector<std::size_t> order) : order_(std::move(order)) {
  position_.assign(order_.size(), std::numeric_limits<std::size_t>::max());
  for (std::size_t k = 0; k < order_.size(); ++k) {
    const auto f = order_[k];
    if (f >= order_.size() || position_[f] != std::numeric_limits<std::size_t>::max()) {
      throw ValidationError("permutation is not a bijection on {0.." + std::to_string(order_.size()) + ")");
    }
    position_[f] = k;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  return Permutation(std::move(order));
}

FeatureMask Permutation::predecessors(std::size_t feature) const {
  FeatureMask m = 0;
  for (std::size_t k = 0; k < position_.at(feature); ++k) m |= feature_bit(order_[k]);
  return m;
}

// ----------------------------------------------------------------- ChainGraph

ChainGraph::ChainGraph(FeatureSpace space, std::vector<ChainComponent> components,
                       bool explicit_parents)
    : space_(std::move(space)), components_(std::move(components)), explicit_parents_(explicit_parents) {
  const std::size_t n = space_.size();
  const std::size_t nc = components_.size();
  constexpr auto unset = std::numeric_limits<std::size_t>::max();
  component_of_.assign(n, unset);
  component_masks_.assign(nc, 0);

  for (std::size_t c = 0; c < nc; ++c) {
    auto& comp = components_[c];
    if (comp.members.empty()) throw StructureError(component_label(c) + " is empty");
    std::sort(comp.members.begin(), comp.members.end());
    for (auto f : comp.members) {
      if (f >= n) {
        throw StructureError(component_label(c) + " references unknown feature index " + std::to_string(f));
      }
      if (component_of_[f] != unset) {
        throw StructureError(component_label(c) + " repeats feature '" + space_[f].name +
                             "' already assigned to " + component_label(component_of_[f]));
      }
      component_of_[f] = c;
      component_masks_[c] |= feature_bit(f);
    }
    std::sort(comp.parents.begin(), comp.parents.end());
    if (std::adjacent_find(comp.parents.begin(), comp.parents.end()) != comp.parents.end()) {
      throw StructureError(component_label(c) + " lists a parent twice");
    }
    for (auto p : comp.parents) {
      if (p >= nc) throw StructureError(component_label(c) + " has unknown parent " + std::to_string(p));
      if (p == c) throw StructureError(component_label(c) + " is its own parent");
    }
  }
  for (std::size_t f = 0; f < n; ++f) {
    if (component_of_[f] == unset) {
      throw StructureError("feature '" + space_[f].name + "' is missing from all components");
    }
  }

  // Kahn's algorithm; smallest listed index first among ready components.
  std::vector<std::size_t> indegree(nc, 0);
  std::vector<std::vector<std::size_t>> children(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    indegree[c] = components_[c].parents.size();
    for (auto p : components_[c].parents) children[p].push_back(c);
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t c = 0; c < nc; ++c) {
    if (indegree[c] == 0) ready.push(c);
  }
  while (!ready.empty()) {
    const auto c = ready.top();
    ready.pop();
    topo_.push_back(c);
    for (auto ch : children[c]) {
      if (--indegree[ch] == 0) ready.push(ch);
    }
  }
  if (topo_.size() != nc) {
    for (std::size_t c = 0; c < nc; ++c) {
      if (indegree[c] != 0) throw StructureError("parent relation is cyclic through " + component_label(c));
    }
  }

  ancestor_.assign(nc, std::vector<bool>(nc, false));
  for (auto c : topo_) {
    for (auto p : components_[c].parents) {
      ancestor_[p][c] = true;
      for (std::size_t a = 0; a < nc; ++a) {
        if (ancestor_[a][p]) ancestor_[a][c] = true;
      }
    }
  }

  parent_masks_.assign(nc, 0);
  for (std::size_t c = 0; c < nc; ++c) {
    for (auto p : components_[c].parents) parent_masks_[c] |= component_masks_[p];
  }
  precede_.assign(n, 0);
  for (std::size_t f = 0; f < n; ++f) {
    for (std::size_t a = 0; a < nc; ++a) {
      if (ancestor_[a][component_of_[f]]) precede_[f] |= component_masks_[a];
    }
  }
}

bool ChainGraph::is_strict_ancestor(std::size_t a, std::size_t b) const { return ancestor_.at(a).at(b); }

ChainGraph build_chain_graph(const FeatureSpace& space,
                             const std::vector<std::vector<std::size_t>>& partial_order,
                             const std::vector<bool>& confounding,
                             const std::optional<std::vector<std::vector<std::size_t>>>& explicit_parents) {
  if (confounding.size() != partial_order.size()) {
    throw StructureError("expected one confounding flag per component (" + std::to_string(partial_order.size()) +
                         "), got " + std::to_string(confounding.size()));
  }
  if (explicit_parents && explicit_parents->size() != partial_order.size()) {
    throw StructureError("expected one parent set per component");
  }
  std::vector<ChainComponent> comps;
  comps.reserve(partial_order.size());
  for (std::size_t c = 0; c < partial_order.size(); ++c) {
    ChainComponent comp;
    comp.members = partial_order[c];
    comp.confounded = confounding[c];
    if (explicit_parents) {
      comp.parents = (*explicit_parents)[c];
    } else {
      for (std::size_t p = 0; p < c; ++p) comp.parents.push_back(p);
    }
    comps.push_back(std::move(comp));
  }
  return ChainGraph(space, std::move(comps), explicit_parents.has_value());
}

ChainGraph build_chain_graph(std::size_t n, const std::vector<std::vector<std::size_t>>& partial_order,
                             const std::vector<bool>& confounding,
                             const std::optional<std::vector<std::vector<std::size_t>>>& explicit_parents) {
  return build_chain_graph(FeatureSpace::anonymous(n), partial_order, confounding, explicit_parents);
}

ChainGraph single_component_graph(const FeatureSpace& space, bool confounded) {
  std::vector<std::size_t> all(space.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return build_chain_graph(space, {all}, {confounded});
}

// ------------------------------------------------------------------ Coalition

Coalition::Coalition(FeatureMask members, std::span<const double> instance)
    : members_(members), values_(instance.size(), std::numeric_limits<double>::quiet_NaN()) {
  if ((members & ~full_mask(instance.size())) != 0) {
    throw ValidationError("coalition references a feature outside the instance");
  }
  for (auto i : mask_members(members)) values_[i] = instance[i];
}

double Coalition::value(std::size_t i) const {
  if (!contains(i)) throw ValidationError("feature " + std::to_string(i) + " is not in the coalition");
  return values_[i];
}

void Coalition::fill(std::span<double> row) const {
  for (auto i : mask_members(members_)) row[i] = values_[i];
}

// ---------------------------------------------------------------- FactorPlan

std::vector<std::size_t> Factor::fixed_conditioning() const {
  std::vector<std::size_t> out = fixed_parents;
  out.insert(out.end(), fixed_within.begin(), fixed_within.end());
  std::sort(out.begin(), out.end());
  return out;
}

FeatureMask FactorPlan::sampled() const {
  FeatureMask m = 0;
  for (const auto& f : factors) m |= mask_from(f.targets);
  return m;
}

FactorPlan intervention_factorization(const ChainGraph& graph, FeatureMask coalition) {
  const auto n = graph.num_features();
  if ((coalition & ~full_mask(n)) != 0) throw ValidationError("coalition references an unknown feature");
  const FeatureMask out = full_mask(n) & ~coalition;
  FactorPlan plan;
  plan.coalition = coalition;
  for (auto c : graph.topological_order()) {
    const auto& comp = graph.components()[c];
    Factor f;
    f.component = c;
    f.confounded = comp.confounded;
    const auto cm = graph.component_mask(c);
    const auto pm = graph.parent_mask(c);
    f.targets = mask_members(cm & out);
    f.sampled_parents = mask_members(pm & out);
    f.fixed_parents = mask_members(pm & coalition);
    if (!comp.confounded) f.fixed_within = mask_members(cm & coalition);
    plan.factors.push_back(std::move(f));
  }
  return plan;
}

bool is_consistent_permutation(const ChainGraph& graph, const Permutation& perm) {
  if (perm.size() != graph.num_features()) throw ValidationError("permutation size does not match graph");
  FeatureMask placed = 0;
  for (auto f : perm.order()) {
    const auto need = graph.must_precede(f);
    if ((need & placed) != need) return false;
    placed |= feature_bit(f);
  }
  return true;
}

// -------------------------------------------------------------------- File IO

nlohmann::json graph_to_json(const ChainGraph& graph) {
  nlohmann::json doc;
  doc["features"] = feature_space_to_json(graph.features());
  auto comps = nlohmann::json::array();
  for (const auto& c : graph.components()) {
    nlohmann::json jc;
    auto members = nlohmann::json::array();
    for (auto f : c.members) members.push_back(graph.features()[f].name);
    jc["members"] = std::move(members);
    jc["confounded"] = c.confounded;
    if (graph.has_explicit_parents()) jc["parents"] = c.parents;
    comps.push_back(std::move(jc));
  }
  doc["components"] = std::move(comps);
  return doc;
}

ChainGraph graph_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("features") || !doc.contains("components")) {
    throw ValidationError("graph file needs 'features' and 'components'");
  }
  auto space = feature_space_from_json(doc["features"]);
  const auto& jcomps = doc["components"];
  if (!jcomps.is_array()) throw ValidationError("'components' must be an array");

  std::vector<std::vector<std::size_t>> order;
  std::vector<bool> confounding;
  std::vector<std::vector<std::size_t>> parents;
  std::size_t with_parents = 0;
  for (std::size_t c = 0; c < jcomps.size(); ++c) {
    const auto& jc = jcomps[c];
    if (!jc.is_object() || !jc.contains("members") || !jc["members"].is_array()) {
      throw StructureError(component_label(c) + " needs a 'members' array");
    }
    std::vector<std::size_t> members;
    for (const auto& m : jc["members"]) {
      if (!m.is_string()) throw StructureError(component_label(c) + " members must be feature names");
      auto idx = space.find(m.get<std::string>());
      if (!idx) throw StructureError(component_label(c) + " references unknown feature '" + m.get<std::string>() + "'");
      members.push_back(*idx);
    }
    order.push_back(std::move(members));
    if (jc.contains("confounded") && !jc["confounded"].is_boolean()) {
      throw StructureError(component_label(c) + " 'confounded' must be a boolean");
    }
    confounding.push_back(jc.value("confounded", true));
    std::vector<std::size_t> ps;
    if (jc.contains("parents")) {
      ++with_parents;
      if (!jc["parents"].is_array()) throw StructureError(component_label(c) + " 'parents' must be an array");
      for (const auto& p : jc["parents"]) {
        if (!p.is_number_unsigned()) {
          throw StructureError(component_label(c) + " parents must be component indices");
        }
        ps.push_back(p.get<std::size_t>());
      }
    }
    parents.push_back(std::move(ps));
  }
  if (with_parents != 0 && with_parents != jcomps.size()) {
    throw StructureError("either every component lists 'parents' or none does");
  }
  if (with_parents == 0) return build_chain_graph(space, order, confounding);
  return build_chain_graph(space, order, confounding, parents);
}

ChainGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open graph file '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("graph file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return graph_from_json(doc);
}

std::string dump_graph(const ChainGraph& graph) { return graph_to_json(graph).dump(2) + "\n"; }

}  // namespace cshap
