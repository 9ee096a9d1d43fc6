#include "fvgm/distribution.hpp"

#include <algorithm>
#include <set>

#include "fvgm/error.hpp"

namespace fvgm {

std::vector<bn::Edge> group_chain_edges(const clf::QuantizedClassifier& qclf) {
  std::vector<bn::Edge> edges;
  for (const auto& g : qclf.groups()) {
    if (g.role == clf::Role::Sensitive) continue;
    for (std::size_t j = 1; j < g.members.size(); ++j) {
      for (std::size_t i = 0; i < j; ++i) edges.emplace_back(g.members[i], g.members[j]);
    }
  }
  return edges;
}

namespace {

BoolDataset classifier_columns(const clf::QuantizedClassifier& qclf, const BoolDataset& data) {
  std::vector<std::string> names;
  for (const auto& f : qclf.features) {
    if (!data.has_column(f.name)) throw InputError("dataset has no column for feature '" + f.name + "'");
    names.push_back(f.name);
  }
  if (names == data.columns()) return data;
  BoolDataset out(names);
  std::vector<const std::vector<std::uint8_t>*> cols;
  for (const auto& n : names) cols.push_back(&data.column(n));
  std::vector<std::uint8_t> row(names.size());
  for (std::size_t r = 0; r < data.num_rows(); ++r) {
    for (std::size_t j = 0; j < cols.size(); ++j) row[j] = (*cols[j])[r];
    out.add_row(row);
  }
  return out;
}

// Chain rows of a nonsensitive group are fixed by the exactly-one constraint:
// an earlier member set forces 0 and the last member with none set forces 1.
// Returns the (child, row key) pairs that were overwritten.
std::set<std::pair<std::string, std::string>> enforce_exclusive(bn::BayesNet& net,
                                                                 const clf::QuantizedClassifier& qclf) {
  std::set<std::pair<std::string, std::string>> fixed;
  for (const auto& g : qclf.groups()) {
    if (g.role == clf::Role::Sensitive || g.members.size() < 2) continue;
    if (!std::all_of(g.members.begin(), g.members.end(), [&](const auto& m) { return net.has_node(m); })) continue;
    std::set<std::string> members(g.members.begin(), g.members.end());
    for (std::size_t j = 0; j < g.members.size(); ++j) {
      auto& cpt = net.cpts.at(g.members[j]);
      const std::size_t arity = cpt.parents.size();
      for (std::size_t row = 0; row < cpt.table.size(); ++row) {
        int ones = 0;
        for (std::size_t b = 0; b < arity; ++b) {
          if (members.count(cpt.parents[b]) && ((row >> (arity - 1 - b)) & 1U)) ++ones;
        }
        if (ones > 0) {
          cpt.table[row] = 0.0;
        } else if (j + 1 == g.members.size()) {
          cpt.table[row] = 1.0;
        } else {
          continue;
        }
        fixed.emplace(cpt.child, bn::Cpt::row_key(row, arity));
      }
    }
  }
  return fixed;
}

}  // namespace

FeatureDistribution fit_distribution(const clf::QuantizedClassifier& qclf, const BoolDataset& data,
                                     const DistributionConfig& config, std::vector<std::string>* warnings) {
  if (config.smoothing < 0.0) throw InputError("smoothing must be non-negative");
  const BoolDataset cols = classifier_columns(qclf, data);
  FeatureDistribution dist;
  const double n = static_cast<double>(cols.num_rows());
  const double s = config.smoothing;

  std::map<std::string, std::size_t> group_size;
  for (const auto& g : qclf.groups()) {
    for (const auto& m : g.members) group_size[m] = g.members.size();
  }
  if (cols.num_rows() == 0 && warnings) warnings->push_back("no rows to fit marginals; using uniform marginals");
  for (const auto& f : qclf.features) {
    const auto& col = cols.column(f.name);
    double ones = 0.0;
    for (auto v : col) ones += v;
    const auto it = group_size.find(f.name);
    const double arity = it == group_size.end() ? 2.0 : static_cast<double>(it->second);
    const double denom = n + arity * s;
    dist.marginals[f.name] = denom > 0.0 ? (ones + s) / denom : 1.0 / arity;
  }

  bn::FitReport report;
  switch (config.mode) {
    case NetworkMode::Independent: break;
    case NetworkMode::Learn: {
      std::set<std::string> choice;
      for (const auto& f : qclf.features) {
        if (f.role == clf::Role::Sensitive) choice.insert(f.name);
      }
      bn::K2Options opts;
      opts.max_parents = config.max_parents;
      opts.required_edges = group_chain_edges(qclf);
      opts.restarts = config.restarts;
      opts.seed = config.seed;
      const auto dag = bn::learn_structure_k2(cols, choice, opts);
      dist.net = bn::fit_mle(dag, cols, s, &report);
      break;
    }
    case NetworkMode::Fixed:
      if (config.structure) {
        dist.net = bn::fit_mle(*config.structure, data, s, &report);
      } else if (config.network) {
        dist.net = *config.network;
      }
      break;
  }
  std::set<std::pair<std::string, std::string>> structural;
  if (config.mode == NetworkMode::Learn || (config.mode == NetworkMode::Fixed && config.structure)) {
    structural = enforce_exclusive(dist.net, qclf);
  }
  if (warnings) {
    for (const auto& [child, row] : report.unseen_rows) {
      if (structural.count({child, row})) continue;
      warnings->push_back("CPT row '" + row + "' of '" + child + "' unseen in data; defaulted to 0.5");
    }
  }
  return dist;
}

DistributionConfig refit_config(const DistributionConfig& config, const FeatureDistribution& fitted) {
  DistributionConfig out = config;
  if (fitted.net.empty()) {
    out.mode = NetworkMode::Independent;
  } else {
    out.mode = NetworkMode::Fixed;
    out.structure = fitted.net.dag;
  }
  out.network.reset();
  return out;
}

namespace {

constexpr std::size_t kMaxChainGroup = 16;

void add_chain(bn::BayesNet& net, const clf::ExclusiveGroup& g, const std::map<std::string, double>& marginals) {
  if (g.members.size() > kMaxChainGroup) {
    throw ResourceLimitError("indicator group '" + g.source + "' has " + std::to_string(g.members.size()) +
                             " members; at most " + std::to_string(kMaxChainGroup) + " are supported");
  }
  std::vector<double> q;
  double total = 0.0;
  for (const auto& m : g.members) {
    auto it = marginals.find(m);
    if (it == marginals.end()) throw InputError("no marginal for indicator '" + m + "'");
    q.push_back(it->second);
    total += it->second;
  }
  for (auto& x : q) x = total > 0.0 ? x / total : 1.0 / static_cast<double>(q.size());
  double remaining = 1.0;
  for (std::size_t j = 0; j < g.members.size(); ++j) {
    bn::Cpt cpt;
    cpt.child = g.members[j];
    cpt.parents.assign(g.members.begin(), g.members.begin() + static_cast<std::ptrdiff_t>(j));
    cpt.table.assign(std::size_t{1} << j, 0.0);
    double p = 0.0;
    if (j + 1 == g.members.size()) {
      p = remaining > 0.0 ? 1.0 : 0.0;
    } else if (remaining > 0.0) {
      p = std::clamp(q[j] / remaining, 0.0, 1.0);
    }
    cpt.table[0] = p;
    remaining = std::max(0.0, remaining - q[j]);
    net.dag.nodes.push_back(cpt.child);
    for (const auto& parent : cpt.parents) net.dag.edges.emplace_back(parent, cpt.child);
    net.cpts[cpt.child] = std::move(cpt);
  }
}

}  // namespace

s3p::CorrelatedInstance build_instance(const clf::QuantizedClassifier& qclf, const FeatureDistribution& dist,
                                       const SensitiveBinding& binding) {
  using s3p::Quantifier;
  s3p::CorrelatedInstance ci;
  ci.instance.threshold = qclf.threshold;
  ci.net = dist.net;
  auto& net = ci.net;

  auto marginal = [&](const std::string& name) {
    auto it = dist.marginals.find(name);
    if (it == dist.marginals.end()) throw InputError("no marginal probability for '" + name + "'");
    return it->second;
  };

  for (std::size_t i = 0; i < qclf.features.size(); ++i) {
    const auto& f = qclf.features[i];
    s3p::QuantifiedVariable v{f.name, qclf.weights[i], Quantifier::random(0.5)};
    const bool in_net = net.has_node(f.name);
    if (f.role == clf::Role::Sensitive) {
      switch (binding.kind) {
        case SensitiveBinding::Kind::Exists: v.quantifier = Quantifier::exists(); break;
        case SensitiveBinding::Kind::Forall: v.quantifier = Quantifier::forall(); break;
        case SensitiveBinding::Kind::Fixed: {
          auto it = binding.fixed.find(f.name);
          if (it == binding.fixed.end()) throw InputError("group does not assign sensitive indicator '" + f.name + "'");
          const double p = it->second ? 1.0 : 0.0;
          v.quantifier = Quantifier::random(p);
          if (in_net) {
            auto& cpt = net.cpts.at(f.name);
            if (!cpt.parents.empty()) throw StructureError("sensitive variable '" + f.name + "' has parents");
            cpt.table = {p};
          }
          break;
        }
        case SensitiveBinding::Kind::Random:
          if (!in_net && dist.marginals.count(f.name)) v.quantifier = Quantifier::random(marginal(f.name));
          break;
      }
    } else if (!in_net && dist.marginals.count(f.name)) {
      v.quantifier = Quantifier::random(marginal(f.name));
    }
    ci.instance.variables.push_back(std::move(v));
  }

  std::set<std::string> known;
  for (const auto& f : qclf.features) known.insert(f.name);
  for (const auto& n : net.dag.nodes) {
    if (!known.count(n)) ci.instance.variables.push_back({n, 0, Quantifier::random(0.5)});
  }

  std::set<std::string> grouped;
  for (const auto& g : qclf.groups()) {
    const bool random_group =
        g.role == clf::Role::Nonsensitive || binding.kind == SensitiveBinding::Kind::Random;
    std::size_t in_net = 0;
    for (const auto& m : g.members) {
      in_net += net.has_node(m) ? 1 : 0;
      grouped.insert(m);
    }
    if (!random_group) continue;
    if (in_net == 0) {
      add_chain(net, g, dist.marginals);
    } else if (in_net != g.members.size()) {
      throw InputError("indicator group '" + g.source + "' is only partly covered by the network");
    }
  }
  for (const auto& f : qclf.features) {
    const bool random = f.role == clf::Role::Nonsensitive || binding.kind == SensitiveBinding::Kind::Random;
    if (random && !net.has_node(f.name) && !grouped.count(f.name)) marginal(f.name);
  }

  // Nodes without edges carry no correlation; they become plain variables.
  std::set<std::string> touched;
  for (const auto& [p, c] : net.dag.edges) {
    touched.insert(p);
    touched.insert(c);
  }
  std::vector<std::string> kept;
  for (const auto& n : net.dag.nodes) {
    if (touched.count(n)) {
      kept.push_back(n);
      continue;
    }
    auto& v = ci.instance.variables[ci.instance.index_of(n)];
    if (!v.quantifier.is_choice()) v.quantifier = Quantifier::random(net.cpts.at(n).table.at(0));
    net.cpts.erase(n);
  }
  net.dag.nodes = std::move(kept);
  net.dag.normalize();
  return ci;
}

s3p::S3PSolution solve_instance(const s3p::CorrelatedInstance& ci, const s3p::SolveOptions& options) {
  if (ci.net.empty()) return s3p::solve(ci.instance, options);
  return s3p::solve_correlated(s3p::order_for_bn(ci), options);
}

std::string summarize(const bn::BayesNet& net) {
  return std::to_string(net.dag.nodes.size()) + " nodes, " + std::to_string(net.dag.edges.size()) + " edges";
}

}  // namespace fvgm
