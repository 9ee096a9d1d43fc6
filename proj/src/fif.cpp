#include "fvgm/fif.hpp"

#include <algorithm>
#include <set>

#include "fvgm/error.hpp"

namespace fvgm::fif {

namespace {

std::vector<std::string> normalized_subset(const clf::QuantizedClassifier& qclf,
                                           const std::vector<std::string>& subset) {
  std::vector<std::string> out = subset;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  const auto sensitive = qclf.sensitive_sources();
  for (const auto& s : out) {
    qclf.indicators_of(s);
    if (std::find(sensitive.begin(), sensitive.end(), s) != sensitive.end()) {
      throw InputError("cannot ablate sensitive feature '" + s + "'");
    }
  }
  return out;
}

double ppv_for(const clf::QuantizedClassifier& qclf, const FeatureDistribution& dist,
               const std::optional<metrics::Group>& group, const s3p::SolveOptions& options) {
  if (group) return metrics::group_ppv(qclf, dist, *group, options);
  return metrics::overall_ppv(qclf, dist, options);
}

}  // namespace

FeatureDistribution ablate_distribution(const clf::QuantizedClassifier& qclf, const FeatureDistribution& dist,
                                        const std::vector<std::string>& subset) {
  FeatureDistribution out = dist;
  std::set<std::string> removed;
  for (const auto& source : normalized_subset(qclf, subset)) {
    const auto members = qclf.indicators_of(source);
    const double p = members.size() == 1 ? 0.5 : 1.0 / static_cast<double>(members.size());
    for (const auto& m : members) {
      out.marginals[m] = p;
      if (dist.net.has_node(m)) removed.insert(m);
    }
  }
  if (removed.empty()) return out;

  const auto& net = dist.net;
  bn::BayesNet ablated;
  for (const auto& n : net.dag.nodes) {
    if (!removed.count(n)) ablated.dag.nodes.push_back(n);
  }
  for (const auto& e : net.dag.edges) {
    if (!removed.count(e.first) && !removed.count(e.second)) ablated.dag.edges.push_back(e);
  }
  for (const auto& n : ablated.dag.nodes) {
    const auto& old = net.cpt(n);
    std::vector<std::string> gone;
    bn::Cpt cpt;
    cpt.child = n;
    for (const auto& p : old.parents) {
      if (removed.count(p)) {
        gone.push_back(p);
      } else {
        cpt.parents.push_back(p);
      }
    }
    if (gone.empty()) {
      ablated.cpts[n] = old;
      continue;
    }
    const auto weights = bn::marginal_table(net, gone);
    cpt.table.assign(std::size_t{1} << cpt.parents.size(), 0.0);
    const std::size_t arity = old.parents.size();
    for (std::size_t row = 0; row < old.table.size(); ++row) {
      std::size_t kept_row = 0, gone_row = 0;
      for (std::size_t b = 0; b < arity; ++b) {
        const int bit = static_cast<int>((row >> (arity - 1 - b)) & 1U);
        if (removed.count(old.parents[b])) {
          gone_row = (gone_row << 1) | bit;
        } else {
          kept_row = (kept_row << 1) | bit;
        }
      }
      cpt.table[kept_row] += weights[gone_row] * old.table[row];
    }
    for (double& v : cpt.table) v = std::clamp(v, 0.0, 1.0);
    ablated.cpts[n] = std::move(cpt);
  }
  out.net = std::move(ablated);
  return out;
}

FifResult fif(const clf::QuantizedClassifier& qclf, const FeatureDistribution& dist,
              const std::optional<metrics::Group>& group, const std::vector<std::string>& subset,
              const s3p::SolveOptions& options) {
  FifResult r;
  r.subset = normalized_subset(qclf, subset);
  r.group = group ? metrics::to_string(*group) : "all";
  r.base_ppv = ppv_for(qclf, dist, group, options);
  if (r.subset.empty()) {
    r.ablated_ppv = r.base_ppv;
  } else {
    r.ablated_ppv = ppv_for(qclf, ablate_distribution(qclf, dist, r.subset), group, options);
  }
  r.influence = r.base_ppv - r.ablated_ppv;
  return r;
}

FifReport fif_all(const clf::QuantizedClassifier& qclf, const FeatureDistribution& dist,
                  const std::optional<metrics::Group>& group, const s3p::SolveOptions& options) {
  FifReport report;
  report.group = group ? metrics::to_string(*group) : "all";
  report.base_ppv = ppv_for(qclf, dist, group, options);
  const auto sensitive = qclf.sensitive_sources();
  for (const auto& source : qclf.sources()) {
    if (std::find(sensitive.begin(), sensitive.end(), source) != sensitive.end()) continue;
    report.results.push_back(fif(qclf, dist, group, {source}, options));
  }
  return report;
}

}  // namespace fvgm::fif
