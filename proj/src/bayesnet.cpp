#include "fvgm/bayesnet.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <random>
#include <unordered_map>

#include "fvgm/error.hpp"

namespace fvgm::bn {

bool Dag::has_node(const std::string& name) const {
  return std::find(nodes.begin(), nodes.end(), name) != nodes.end();
}

bool Dag::has_edge(const std::string& parent, const std::string& child) const {
  return std::find(edges.begin(), edges.end(), Edge{parent, child}) != edges.end();
}

std::vector<std::string> Dag::parents(const std::string& child) const {
  std::vector<std::string> out;
  for (const auto& [p, c] : edges) {
    if (c == child) out.push_back(p);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> Dag::children(const std::string& parent) const {
  std::vector<std::string> out;
  for (const auto& [p, c] : edges) {
    if (p == parent) out.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void Dag::normalize() {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

void Dag::validate(const std::set<std::string>& choice_vars) const {
  std::set<std::string> seen;
  for (const auto& n : nodes) {
    if (!seen.insert(n).second) throw InputError("duplicate network node '" + n + "'");
  }
  for (const auto& [p, c] : edges) {
    if (!seen.count(p) || !seen.count(c)) {
      throw InputError("edge (" + p + ", " + c + ") references a node outside the network");
    }
    if (p == c) throw StructureError("self-loop on '" + p + "'");
    if (choice_vars.count(c)) {
      throw StructureError("edge (" + p + ", " + c + ") points into choice variable '" + c + "'");
    }
  }
  topo_sort(*this);
}

std::size_t Cpt::row_index(const std::vector<int>& parent_values) {
  std::size_t row = 0;
  for (int v : parent_values) row = (row << 1) | (v ? 1U : 0U);
  return row;
}

std::string Cpt::row_key(std::size_t row, std::size_t arity) {
  std::string key(arity, '0');
  for (std::size_t j = 0; j < arity; ++j) {
    if (row >> (arity - 1 - j) & 1U) key[j] = '1';
  }
  return key;
}

const Cpt& BayesNet::cpt(const std::string& child) const {
  auto it = cpts.find(child);
  if (it == cpts.end()) throw InputError("network has no node '" + child + "'");
  return it->second;
}

void BayesNet::validate(const std::set<std::string>& choice_vars) const {
  dag.validate(choice_vars);
  if (cpts.size() != dag.nodes.size()) throw InputError("network must have exactly one CPT per node");
  for (const auto& n : dag.nodes) {
    const auto& c = cpt(n);
    auto expected = dag.parents(n);
    auto listed = c.parents;
    std::sort(listed.begin(), listed.end());
    if (listed != expected) throw InputError("CPT parents of '" + n + "' disagree with the network edges");
    if (c.table.size() != (std::size_t{1} << c.parents.size())) {
      throw InputError("CPT of '" + n + "' must have " + std::to_string(1U << c.parents.size()) + " rows");
    }
    for (double p : c.table) {
      if (!(p >= 0.0 && p <= 1.0)) throw InputError("CPT of '" + n + "' has a probability outside [0,1]");
    }
  }
}

std::vector<std::string> topo_sort(const Dag& dag) {
  std::map<std::string, std::size_t> indegree;
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& n : dag.nodes) indegree[n] = 0;
  for (const auto& [p, c] : dag.edges) {
    ++indegree[c];
    out[p].push_back(c);
  }
  std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
  for (const auto& [n, d] : indegree) {
    if (d == 0) ready.push(n);
  }
  std::vector<std::string> order;
  while (!ready.empty()) {
    auto n = ready.top();
    ready.pop();
    order.push_back(n);
    for (const auto& c : out[n]) {
      if (--indegree[c] == 0) ready.push(c);
    }
  }
  if (order.size() != indegree.size()) {
    for (const auto& [p, c] : dag.edges) {
      if (indegree[p] > 0 && indegree[c] > 0) {
        throw StructureError("network has a cycle through edge (" + p + ", " + c + ")");
      }
    }
    throw StructureError("network has a cycle");
  }
  return order;
}

std::vector<std::string> topo_sort(const BayesNet& net) { return topo_sort(net.dag); }

namespace {

/// Counts (parent configuration, child value) pairs. Sparse beyond 20 parents.
struct FamilyCounts {
  std::unordered_map<std::uint64_t, std::array<std::size_t, 2>> counts;
};

FamilyCounts count_family(const BoolDataset& data, std::size_t child, const std::vector<std::size_t>& parents) {
  FamilyCounts fc;
  const auto& cc = data.column(child);
  std::vector<const std::vector<std::uint8_t>*> pcols;
  for (auto p : parents) pcols.push_back(&data.column(p));
  for (std::size_t r = 0; r < data.num_rows(); ++r) {
    std::uint64_t key = 0;
    for (const auto* col : pcols) key = (key << 1) | (*col)[r];
    ++fc.counts[key][cc[r]];
  }
  return fc;
}

double family_score_idx(const BoolDataset& data, std::size_t child, const std::vector<std::size_t>& parents) {
  const auto fc = count_family(data, child, parents);
  double score = 0.0;
  for (const auto& [key, c] : fc.counts) {
    const double n0 = static_cast<double>(c[0]);
    const double n1 = static_cast<double>(c[1]);
    // log[(r-1)! / (N_j + r - 1)!] + sum_k log N_jk!, r = 2
    score += std::lgamma(n0 + 1.0) + std::lgamma(n1 + 1.0) - std::lgamma(n0 + n1 + 2.0);
  }
  return score;
}

}  // namespace

BayesNet fit_mle(const Dag& dag, const BoolDataset& data, double smoothing, FitReport* report) {
  if (smoothing < 0.0) throw InputError("smoothing must be non-negative");
  for (const auto& n : dag.nodes) {
    if (!data.has_column(n)) throw InputError("dataset has no column for network node '" + n + "'");
  }
  BayesNet net;
  net.dag = dag;
  net.dag.normalize();
  for (const auto& n : net.dag.nodes) {
    Cpt cpt;
    cpt.child = n;
    cpt.parents = net.dag.parents(n);
    if (cpt.parents.size() > 24) throw ResourceLimitError("node '" + n + "' has too many parents for a dense CPT");
    const std::size_t rows = std::size_t{1} << cpt.parents.size();
    std::vector<std::size_t> total(rows, 0), positive(rows, 0);
    const auto& cc = data.column(n);
    std::vector<const std::vector<std::uint8_t>*> pcols;
    for (const auto& p : cpt.parents) pcols.push_back(&data.column(p));
    for (std::size_t r = 0; r < data.num_rows(); ++r) {
      std::size_t row = 0;
      for (const auto* col : pcols) row = (row << 1) | (*col)[r];
      ++total[row];
      positive[row] += cc[r];
    }
    cpt.table.resize(rows);
    for (std::size_t row = 0; row < rows; ++row) {
      const double denom = static_cast<double>(total[row]) + 2.0 * smoothing;
      if (denom <= 0.0) {
        cpt.table[row] = 0.5;
        if (report) report->unseen_rows.emplace_back(n, Cpt::row_key(row, cpt.parents.size()));
      } else {
        cpt.table[row] = (static_cast<double>(positive[row]) + smoothing) / denom;
      }
    }
    net.cpts.emplace(n, std::move(cpt));
  }
  return net;
}

double k2_family_score(const BoolDataset& data, const std::string& child, const std::vector<std::string>& parents) {
  std::vector<std::size_t> idx;
  for (const auto& p : parents) idx.push_back(data.column_index(p));
  return family_score_idx(data, data.column_index(child), idx);
}

double k2_score(const Dag& dag, const BoolDataset& data) {
  double s = 0.0;
  for (const auto& n : dag.nodes) s += k2_family_score(data, n, dag.parents(n));
  return s;
}

namespace {

/// Hill-climbing state over column indices.
class K2Search {
 public:
  K2Search(const BoolDataset& data, const std::set<std::string>& choice_vars, const K2Options& opts)
      : data_(data), m_(data.num_columns()), max_parents_(opts.max_parents) {
    parents_.assign(m_, {});
    required_.assign(m_, std::vector<bool>(m_, false));
    choice_.assign(m_, false);
    for (const auto& c : choice_vars) {
      if (data.has_column(c)) choice_[data.column_index(c)] = true;
    }
    for (const auto& [p, c] : opts.required_edges) {
      const auto pi = data.column_index(p);
      const auto ci = data.column_index(c);
      if (choice_[ci]) throw StructureError("required edge (" + p + ", " + c + ") points into a choice variable");
      required_[pi][ci] = true;
      add_edge(pi, ci);
    }
    if (has_cycle()) throw StructureError("required edges form a cycle");
  }

  void climb() {
    for (std::size_t iter = 0; iter < 100000; ++iter) {
      Move best;
      for (std::size_t u = 0; u < m_; ++u) {
        for (std::size_t v = 0; v < m_; ++v) {
          if (u == v) continue;
          consider(u, v, best);
        }
      }
      if (best.kind == MoveKind::None) return;
      apply(best);
    }
  }

  /// Adds random admissible edges; used to escape local optima on restarts.
  void perturb(std::mt19937_64& rng, std::size_t count) {
    for (std::size_t k = 0; k < count; ++k) {
      const auto u = static_cast<std::size_t>(rng() % m_);
      const auto v = static_cast<std::size_t>(rng() % m_);
      if (u == v || has(u, v) || has(v, u) || !can_gain_parent(v) || reaches(v, u)) continue;
      add_edge(u, v);
    }
  }

  double total_score() {
    double s = 0.0;
    for (std::size_t v = 0; v < m_; ++v) s += family(v, parents_[v]);
    return s;
  }

  Dag to_dag() const {
    Dag dag;
    dag.nodes = data_.columns();
    for (std::size_t v = 0; v < m_; ++v) {
      for (auto p : parents_[v]) dag.edges.emplace_back(data_.columns()[p], data_.columns()[v]);
    }
    dag.normalize();
    return dag;
  }

  std::vector<std::vector<std::size_t>> parents_;

 private:
  enum class MoveKind { None, Add, Remove, Reverse };
  struct Move {
    MoveKind kind = MoveKind::None;
    std::size_t u = 0, v = 0;
    double delta = 1e-9;
  };

  bool has(std::size_t u, std::size_t v) const {
    return std::find(parents_[v].begin(), parents_[v].end(), u) != parents_[v].end();
  }

  std::size_t learned_parents(std::size_t v) const {
    std::size_t k = 0;
    for (auto p : parents_[v]) k += required_[p][v] ? 0 : 1;
    return k;
  }

  bool can_gain_parent(std::size_t v) const { return !choice_[v] && learned_parents(v) < max_parents_; }

  void add_edge(std::size_t u, std::size_t v) {
    parents_[v].push_back(u);
    std::sort(parents_[v].begin(), parents_[v].end());
  }

  void remove_edge(std::size_t u, std::size_t v) {
    parents_[v].erase(std::find(parents_[v].begin(), parents_[v].end(), u));
  }

  /// Directed path from `from` to `to`, optionally ignoring the edge skip_u -> skip_v.
  bool reaches(std::size_t from, std::size_t to, std::size_t skip_u = SIZE_MAX, std::size_t skip_v = SIZE_MAX) const {
    std::vector<std::vector<std::size_t>> children(m_);
    for (std::size_t v = 0; v < m_; ++v) {
      for (auto p : parents_[v]) {
        if (p == skip_u && v == skip_v) continue;
        children[p].push_back(v);
      }
    }
    std::vector<bool> seen(m_, false);
    std::vector<std::size_t> stack{from};
    while (!stack.empty()) {
      auto x = stack.back();
      stack.pop_back();
      if (x == to) return true;
      if (seen[x]) continue;
      seen[x] = true;
      for (auto c : children[x]) stack.push_back(c);
    }
    return false;
  }

  bool has_cycle() const {
    for (std::size_t v = 0; v < m_; ++v) {
      for (auto p : parents_[v]) {
        if (reaches(v, p)) return true;
      }
    }
    return false;
  }

  double family(std::size_t v, const std::vector<std::size_t>& pa) {
    auto key = std::make_pair(v, pa);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const double s = family_score_idx(data_, v, pa);
    cache_.emplace(std::move(key), s);
    return s;
  }

  std::vector<std::size_t> with(std::vector<std::size_t> pa, std::size_t x) {
    pa.push_back(x);
    std::sort(pa.begin(), pa.end());
    return pa;
  }

  std::vector<std::size_t> without(std::vector<std::size_t> pa, std::size_t x) {
    pa.erase(std::find(pa.begin(), pa.end(), x));
    return pa;
  }

  void consider(std::size_t u, std::size_t v, Move& best) {
    if (has(u, v)) {
      if (required_[u][v]) return;
      const double base_v = family(v, parents_[v]);
      const double removed = family(v, without(parents_[v], u)) - base_v;
      if (removed > best.delta) best = {MoveKind::Remove, u, v, removed};
      if (can_gain_parent(u) && !reaches(u, v, u, v)) {
        const double reversed = removed + family(u, with(parents_[u], v)) - family(u, parents_[u]);
        if (reversed > best.delta) best = {MoveKind::Reverse, u, v, reversed};
      }
      return;
    }
    if (has(v, u) || !can_gain_parent(v) || reaches(v, u)) return;
    const double added = family(v, with(parents_[v], u)) - family(v, parents_[v]);
    if (added > best.delta) best = {MoveKind::Add, u, v, added};
  }

  void apply(const Move& m) {
    switch (m.kind) {
      case MoveKind::Add: add_edge(m.u, m.v); break;
      case MoveKind::Remove: remove_edge(m.u, m.v); break;
      case MoveKind::Reverse:
        remove_edge(m.u, m.v);
        add_edge(m.v, m.u);
        break;
      case MoveKind::None: break;
    }
  }

  const BoolDataset& data_;
  std::size_t m_;
  std::size_t max_parents_;
  std::vector<std::vector<bool>> required_;
  std::vector<bool> choice_;
  std::map<std::pair<std::size_t, std::vector<std::size_t>>, double> cache_;
};

}  // namespace

Dag learn_structure_k2(const BoolDataset& data, const std::set<std::string>& choice_vars, const K2Options& options) {
  if (options.max_parents < 1) throw InputError("max_parents must be at least 1");
  K2Search search(data, choice_vars, options);
  search.climb();
  Dag best = search.to_dag();
  double best_score = search.total_score();
  std::mt19937_64 rng(options.seed);
  for (std::size_t r = 0; r < options.restarts; ++r) {
    K2Search restart(data, choice_vars, options);
    restart.parents_ = search.parents_;
    restart.perturb(rng, std::max<std::size_t>(1, data.num_columns() / 2));
    restart.climb();
    const double s = restart.total_score();
    if (s > best_score + 1e-9) {
      best_score = s;
      best = restart.to_dag();
    }
  }
  return best;
}

double joint_prob(const BayesNet& net, const std::map<std::string, int>& assignment,
                  const std::map<std::string, double>& marginals) {
  double prob = 1.0;
  for (const auto& n : net.dag.nodes) {
    const auto& c = net.cpt(n);
    auto self = assignment.find(n);
    if (self == assignment.end()) throw InputError("assignment is missing network node '" + n + "'");
    std::vector<int> pv;
    for (const auto& p : c.parents) {
      auto it = assignment.find(p);
      if (it == assignment.end()) throw InputError("assignment is missing network node '" + p + "'");
      pv.push_back(it->second);
    }
    const double p1 = c.table[Cpt::row_index(pv)];
    prob *= self->second ? p1 : 1.0 - p1;
  }
  for (const auto& [name, value] : assignment) {
    if (net.has_node(name)) continue;
    auto it = marginals.find(name);
    if (it == marginals.end()) throw InputError("no marginal for variable '" + name + "'");
    prob *= value ? it->second : 1.0 - it->second;
  }
  return prob;
}

double conditional(const BayesNet& net, const std::string& child, const std::vector<int>& parent_assignment) {
  const auto& c = net.cpt(child);
  if (parent_assignment.size() != c.parents.size()) {
    throw InputError("node '" + child + "' has " + std::to_string(c.parents.size()) + " parents, got " +
                     std::to_string(parent_assignment.size()) + " values");
  }
  return c.table[Cpt::row_index(parent_assignment)];
}

std::vector<double> marginal_table(const BayesNet& net, const std::vector<std::string>& vars) {
  std::set<std::string> closure;
  std::vector<std::string> frontier(vars.begin(), vars.end());
  while (!frontier.empty()) {
    auto x = frontier.back();
    frontier.pop_back();
    if (!net.has_node(x)) throw InputError("network has no node '" + x + "'");
    if (!closure.insert(x).second) continue;
    for (const auto& p : net.dag.parents(x)) frontier.push_back(p);
  }
  std::vector<std::string> order;
  for (const auto& n : topo_sort(net)) {
    if (closure.count(n)) order.push_back(n);
  }
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;

  struct Node {
    std::vector<std::size_t> parent_pos;
    const std::vector<double>* table;
  };
  std::vector<Node> nodes;
  for (const auto& n : order) {
    Node node{{}, &net.cpt(n).table};
    for (const auto& p : net.cpt(n).parents) node.parent_pos.push_back(pos.at(p));
    nodes.push_back(std::move(node));
  }
  std::vector<std::size_t> query_pos;
  for (const auto& v : vars) query_pos.push_back(pos.at(v));

  std::vector<double> out(std::size_t{1} << vars.size(), 0.0);
  std::vector<int> value(order.size(), 0);
  std::function<void(std::size_t, double)> walk = [&](std::size_t i, double prob) {
    if (i == order.size()) {
      std::size_t row = 0;
      for (auto q : query_pos) row = (row << 1) | static_cast<std::size_t>(value[q]);
      out[row] += prob;
      return;
    }
    std::size_t row = 0;
    for (auto pp : nodes[i].parent_pos) row = (row << 1) | static_cast<std::size_t>(value[pp]);
    const double p1 = (*nodes[i].table)[row];
    if (p1 > 0.0) {
      value[i] = 1;
      walk(i + 1, prob * p1);
    }
    if (p1 < 1.0) {
      value[i] = 0;
      walk(i + 1, prob * (1.0 - p1));
    }
  };
  walk(0, 1.0);
  return out;
}

nlohmann::ordered_json to_json(const BayesNet& net) {
  nlohmann::ordered_json j;
  j["nodes"] = net.dag.nodes;
  auto edges = nlohmann::ordered_json::array();
  for (const auto& [p, c] : net.dag.edges) edges.push_back({p, c});
  j["edges"] = edges;
  nlohmann::ordered_json cpts = nlohmann::ordered_json::object();
  for (const auto& n : net.dag.nodes) {
    const auto& c = net.cpt(n);
    nlohmann::ordered_json table = nlohmann::ordered_json::object();
    for (std::size_t row = 0; row < c.table.size(); ++row) table[Cpt::row_key(row, c.parents.size())] = c.table[row];
    cpts[n] = {{"parents", c.parents}, {"table", table}};
  }
  j["cpts"] = cpts;
  return j;
}

BayesNet from_json(const nlohmann::json& j) {
  try {
    BayesNet net;
    net.dag.nodes = j.at("nodes").get<std::vector<std::string>>();
    for (const auto& e : j.value("edges", nlohmann::json::array())) {
      if (!e.is_array() || e.size() != 2) throw InputError("network edges must be [parent, child] pairs");
      net.dag.edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
    const auto& cpts = j.at("cpts");
    for (const auto& n : net.dag.nodes) {
      if (!cpts.contains(n)) throw InputError("network has no CPT for node '" + n + "'");
      const auto& jc = cpts.at(n);
      Cpt c;
      c.child = n;
      c.parents = jc.value("parents", std::vector<std::string>{});
      const std::size_t rows = std::size_t{1} << c.parents.size();
      c.table.assign(rows, -1.0);
      for (const auto& [key, p] : jc.at("table").items()) {
        if (key.size() != c.parents.size() || key.find_first_not_of("01") != std::string::npos) {
          throw InputError("CPT of '" + n + "' has malformed row key '" + key + "'");
        }
        std::size_t row = 0;
        for (char ch : key) row = (row << 1) | (ch == '1' ? 1U : 0U);
        c.table[row] = p.get<double>();
      }
      for (std::size_t row = 0; row < rows; ++row) {
        if (c.table[row] < 0.0) {
          throw InputError("CPT of '" + n + "' is missing row '" + Cpt::row_key(row, c.parents.size()) + "'");
        }
      }
      net.cpts.emplace(n, std::move(c));
    }
    net.validate();
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed network file: ") + e.what());
  }
}

BayesNet load(const std::string& path) {
  try {
    return from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("cannot parse network '" + path + "': " + e.what());
  }
}

}  // namespace fvgm::bn
