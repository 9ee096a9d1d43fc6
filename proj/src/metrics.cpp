#include "fvgm/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "fvgm/error.hpp"

namespace fvgm::metrics {

std::string to_string(const Group& group) {
  std::string out;
  for (const auto& [attr, value] : group) {
    if (!out.empty()) out += ',';
    out += attr + "=" + value;
  }
  return out;
}

Group parse_group(const std::string& text) {
  Group g;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw InputError("group entry '" + item + "' must look like attr=value");
    g.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  if (g.empty()) throw InputError("empty group");
  std::sort(g.begin(), g.end());
  return g;
}

namespace {

struct Attribute {
  std::string name;
  bool binary = true;
  std::vector<std::string> members;
  std::vector<std::string> labels;
};

std::vector<Attribute> sensitive_attributes(const clf::QuantizedClassifier& qclf) {
  std::vector<Attribute> attrs;
  for (const auto& source : qclf.sensitive_sources()) {
    Attribute a;
    a.name = source;
    for (const auto& f : qclf.features) {
      if (f.source != source) continue;
      a.members.push_back(f.name);
      if (f.kind == clf::IndicatorKind::Passthrough) {
        a.labels = {"0", "1"};
      } else {
        a.binary = false;
        a.labels.push_back(f.label);
      }
    }
    attrs.push_back(std::move(a));
  }
  std::sort(attrs.begin(), attrs.end(), [](const auto& x, const auto& y) { return x.name < y.name; });
  return attrs;
}

}  // namespace

std::vector<Group> enumerate_groups(const clf::QuantizedClassifier& qclf) {
  const auto attrs = sensitive_attributes(qclf);
  std::vector<Group> out{{}};
  for (const auto& a : attrs) {
    auto labels = a.labels;
    std::sort(labels.begin(), labels.end());
    std::vector<Group> next;
    for (const auto& prefix : out) {
      for (const auto& l : labels) {
        auto g = prefix;
        g.emplace_back(a.name, l);
        next.push_back(std::move(g));
      }
    }
    out = std::move(next);
  }
  if (attrs.empty()) out.clear();
  return out;
}

std::map<std::string, int> group_assignment(const clf::QuantizedClassifier& qclf, const Group& group) {
  std::map<std::string, int> fixed;
  std::map<std::string, std::string> wanted;
  for (const auto& [attr, value] : group) {
    if (!wanted.emplace(attr, value).second) throw InputError("group assigns '" + attr + "' twice");
  }
  for (const auto& a : sensitive_attributes(qclf)) {
    auto it = wanted.find(a.name);
    if (it == wanted.end()) throw InputError("group does not assign sensitive attribute '" + a.name + "'");
    if (a.binary) {
      if (it->second != "0" && it->second != "1") {
        throw InputError("Boolean attribute '" + a.name + "' takes 0 or 1, not '" + it->second + "'");
      }
      fixed[a.members.front()] = it->second == "1" ? 1 : 0;
    } else {
      bool found = false;
      for (std::size_t j = 0; j < a.members.size(); ++j) {
        const bool hit = a.labels[j] == it->second;
        found = found || hit;
        fixed[a.members[j]] = hit ? 1 : 0;
      }
      if (!found) throw InputError("attribute '" + a.name + "' has no category '" + it->second + "'");
    }
    wanted.erase(it);
  }
  if (!wanted.empty()) throw InputError("'" + wanted.begin()->first + "' is not a sensitive attribute");
  return fixed;
}

double group_ppv(const clf::QuantizedClassifier& qclf, const FeatureDistribution& dist, const Group& group,
                 const s3p::SolveOptions& options, s3p::SolverStats* stats) {
  SensitiveBinding binding{SensitiveBinding::Kind::Fixed, group_assignment(qclf, group)};
  const auto sol = solve_instance(build_instance(qclf, dist, binding), options);
  if (stats) {
    stats->memo_entries += sol.stats.memo_entries;
    stats->dp_calls += sol.stats.dp_calls;
  }
  return sol.value;
}

double overall_ppv(const clf::QuantizedClassifier& qclf, const FeatureDistribution& dist,
                   const s3p::SolveOptions& options) {
  SensitiveBinding binding{SensitiveBinding::Kind::Random, {}};
  return solve_instance(build_instance(qclf, dist, binding), options).value;
}

PpvResult max_min_ppv(const clf::QuantizedClassifier& qclf, const FeatureDistribution& dist,
                      const PpvOptions& options) {
  const auto attrs = sensitive_attributes(qclf);
  if (attrs.empty()) throw InputError("classifier has no sensitive features");
  const bool all_binary = std::all_of(attrs.begin(), attrs.end(), [](const auto& a) { return a.binary; });
  const bool enumerate = options.mode == GroupMode::Enumerate || (options.mode == GroupMode::Auto && !all_binary);

  PpvResult out;
  out.enumerated = enumerate;
  if (!enumerate) {
    for (const auto kind : {SensitiveBinding::Kind::Exists, SensitiveBinding::Kind::Forall}) {
      const auto sol = solve_instance(build_instance(qclf, dist, {kind, {}}), options.solve);
      out.stats.memo_entries += sol.stats.memo_entries;
      out.stats.dp_calls += sol.stats.dp_calls;
      GroupResult r;
      r.ppv = sol.value;
      for (const auto& a : attrs) {
        if (!a.binary) throw InputError("quantifier mode needs Boolean sensitive attributes; '" + a.name + "' is not");
        r.group.emplace_back(a.name, sol.choice_assignment.at(a.members.front()) ? "1" : "0");
      }
      (kind == SensitiveBinding::Kind::Exists ? out.max : out.min) = std::move(r);
    }
    return out;
  }

  bool first = true;
  for (const auto& g : enumerate_groups(qclf)) {
    const double ppv = group_ppv(qclf, dist, g, options.solve, &out.stats);
    if (first || ppv > out.max.ppv) out.max = {g, ppv};
    if (first || ppv < out.min.ppv) out.min = {g, ppv};
    first = false;
  }
  return out;
}

double disparate_impact(const GroupResult& max, const GroupResult& min) {
  if (max.ppv <= 0.0) return 1.0;
  return min.ppv / max.ppv;
}

double statistical_parity(const GroupResult& max, const GroupResult& min) { return max.ppv - min.ppv; }

EqualizedOddsResult equalized_odds(const clf::QuantizedClassifier& qclf, const BoolDataset& data,
                                   const std::vector<std::uint8_t>& labels, const DistributionConfig& config,
                                   const PpvOptions& options) {
  if (labels.size() != data.num_rows()) throw InputError("label column length does not match the dataset");
  EqualizedOddsResult out;
  const auto full = fit_distribution(qclf, data, config);
  const auto refit = refit_config(config, full);
  for (int y : {0, 1}) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < labels.size(); ++r) {
      if (labels[r] == y) rows.push_back(r);
    }
    if (rows.empty()) {
      out.warnings.push_back("no rows with label " + std::to_string(y) + "; equalized odds uses the other slice only");
      continue;
    }
    const auto slice = data.select_rows(rows);
    const auto dist = fit_distribution(qclf, slice, refit, &out.warnings);
    const auto r = max_min_ppv(qclf, dist, options);
    const double gap = statistical_parity(r.max, r.min);
    out.gap_by_label[y] = gap;
    out.value = out.value ? std::max(*out.value, gap) : gap;
  }
  return out;
}

double path_specific_causal_fairness(const clf::QuantizedClassifier& qclf, const BoolDataset& data,
                                     const std::vector<std::string>& mediators, const DistributionConfig& config,
                                     const PpvOptions& options) {
  const auto full = fit_distribution(qclf, data, config);
  const auto base = max_min_ppv(qclf, full, options);
  if (mediators.empty()) return statistical_parity(base.max, base.min);

  std::set<std::string> sensitive, mediator_vars;
  for (const auto& f : qclf.features) {
    if (f.role == clf::Role::Sensitive) sensitive.insert(f.name);
  }
  for (const auto& z : mediators) {
    for (const auto& ind : qclf.indicators_of(z)) {
      if (sensitive.count(ind)) throw InputError("mediator '" + z + "' is a sensitive feature");
      mediator_vars.insert(ind);
    }
  }

  const auto fixed = group_assignment(qclf, base.max.group);
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < data.num_rows(); ++r) {
    bool match = true;
    for (const auto& [name, v] : fixed) match = match && data.column(name)[r] == v;
    if (match) rows.push_back(r);
  }
  if (rows.empty()) {
    throw InputError("no rows with A = " + to_string(base.max.group) +
                     "; add smoothing or choose different mediators");
  }
  const auto slice = data.select_rows(rows);

  FeatureDistribution mediated = full;
  DistributionConfig marg_only;
  marg_only.smoothing = config.smoothing;
  const auto slice_marginals = fit_distribution(qclf, slice, marg_only).marginals;
  for (const auto& z : mediator_vars) mediated.marginals[z] = slice_marginals.at(z);

  auto& net = mediated.net;
  for (const auto& z : mediator_vars) {
    if (!net.has_node(z)) continue;
    bn::Dag local;
    local.nodes.push_back(z);
    for (const auto& p : net.dag.parents(z)) {
      if (sensitive.count(p)) continue;
      local.nodes.push_back(p);
      local.edges.emplace_back(p, z);
    }
    auto refit = bn::fit_mle(local, slice, config.smoothing);
    net.cpts[z] = refit.cpt(z);
  }
  std::erase_if(net.dag.edges, [&](const bn::Edge& e) { return sensitive.count(e.first) && mediator_vars.count(e.second); });

  const auto r = max_min_ppv(qclf, mediated, options);
  return statistical_parity(r.max, r.min);
}

std::string to_string(Metric m) {
  switch (m) {
    case Metric::DI: return "di";
    case Metric::SP: return "sp";
    case Metric::EO: return "eo";
    case Metric::PCF: return "pcf";
  }
  return "di";
}

Metric parse_metric(const std::string& name) {
  std::string lower;
  for (char c : name) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "di") return Metric::DI;
  if (lower == "sp") return Metric::SP;
  if (lower == "eo") return Metric::EO;
  if (lower == "pcf") return Metric::PCF;
  throw InputError("unknown metric '" + name + "' (expected di, sp, eo or pcf)");
}

bool verify_epsilon(Metric metric, double value, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InputError("epsilon must lie in [0,1]");
  if (metric == Metric::DI) return value >= 1.0 - epsilon;
  return value <= epsilon;
}

std::optional<double> FairnessReport::value(Metric m) const {
  switch (m) {
    case Metric::DI: return di;
    case Metric::SP: return sp;
    case Metric::EO: return eo;
    case Metric::PCF: return pcf;
  }
  return std::nullopt;
}

bool verify_epsilon(const FairnessReport& report, Metric metric, double epsilon) {
  const auto v = report.value(metric);
  return v && verify_epsilon(metric, *v, epsilon);
}

void FairnessReport::apply_epsilons(const std::map<std::string, double>& eps) {
  for (const auto& [name, e] : eps) {
    const auto m = parse_metric(name);
    epsilon[to_string(m)] = e;
    verdicts[to_string(m)] = verify_epsilon(*this, m, e);
  }
}

bool FairnessReport::all_pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const auto& kv) { return kv.second; });
}

}  // namespace fvgm::metrics
