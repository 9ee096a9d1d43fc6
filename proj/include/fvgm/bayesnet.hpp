#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fvgm/dataset.hpp"
#include "json.hpp"

namespace fvgm::bn {

using Edge = std::pair<std::string, std::string>;  // (parent, child)

struct Dag {
  std::vector<std::string> nodes;
  std::vector<Edge> edges;

  bool has_node(const std::string& name) const;
  bool has_edge(const std::string& parent, const std::string& child) const;
  /// Parents in name order.
  std::vector<std::string> parents(const std::string& child) const;
  std::vector<std::string> children(const std::string& parent) const;
  /// Sorts nodes and edges so equal graphs compare and serialize identically.
  void normalize();
  /// Endpoints exist, graph is acyclic, and no choice variable has a parent.
  void validate(const std::set<std::string>& choice_vars = {}) const;
};

/// Pr[child = 1 | parents]. Row index reads the parent values as a binary
/// number with the first listed parent as the most significant bit, which is
/// also the order of the bitstring keys in the network file.
struct Cpt {
  std::string child;
  std::vector<std::string> parents;
  std::vector<double> table;

  static std::size_t row_index(const std::vector<int>& parent_values);
  static std::string row_key(std::size_t row, std::size_t arity);
};

struct BayesNet {
  Dag dag;
  std::map<std::string, Cpt> cpts;

  bool empty() const { return dag.nodes.empty(); }
  bool has_node(const std::string& name) const { return dag.has_node(name); }
  const Cpt& cpt(const std::string& child) const;
  /// Dag invariants plus one consistent, correctly sized CPT per node with rows in [0,1].
  void validate(const std::set<std::string>& choice_vars = {}) const;
};

/// Kahn's algorithm; among ready nodes the smallest name goes first.
std::vector<std::string> topo_sort(const Dag& dag);
std::vector<std::string> topo_sort(const BayesNet& net);

struct FitReport {
  /// (child, row key) pairs whose parent configuration never occurred and fell back to 0.5.
  std::vector<std::pair<std::string, std::string>> unseen_rows;
};

BayesNet fit_mle(const Dag& dag, const BoolDataset& data, double smoothing, FitReport* report = nullptr);

struct K2Options {
  /// Cap on learned parents per node; required edges do not count against it.
  std::size_t max_parents = 3;
  /// Edges present from the start that the search may neither remove nor reverse.
  std::vector<Edge> required_edges;
  std::size_t restarts = 0;
  std::uint64_t seed = 0;
};

/// log of the Cooper-Herskovits marginal likelihood of one family with a
/// uniform Dirichlet(1) prior over Boolean child values.
double k2_family_score(const BoolDataset& data, const std::string& child, const std::vector<std::string>& parents);
double k2_score(const Dag& dag, const BoolDataset& data);

/// Greedy hill climbing over edge additions, removals and reversals.
Dag learn_structure_k2(const BoolDataset& data, const std::set<std::string>& choice_vars,
                       const K2Options& options = {});

/// Product of CPT entries for network nodes times independent marginals for
/// the remaining assigned variables.
double joint_prob(const BayesNet& net, const std::map<std::string, int>& assignment,
                  const std::map<std::string, double>& marginals);

double conditional(const BayesNet& net, const std::string& child, const std::vector<int>& parent_assignment);

/// Joint distribution of `vars` (indexed like Cpt rows) by enumerating their
/// ancestral closure; zero-probability branches are pruned.
std::vector<double> marginal_table(const BayesNet& net, const std::vector<std::string>& vars);

nlohmann::ordered_json to_json(const BayesNet& net);
BayesNet from_json(const nlohmann::json& j);
BayesNet load(const std::string& path);

}  // namespace fvgm::bn
