#include "fvgm/synthbench.hpp"

#include <cmath>
#include <charconv>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include "fvgm/error.hpp"

namespace fvgm::synth {

double uniform01(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

void SynthSpec::validate() const {
  if (n < 2) throw InputError("benchmark needs at least one nonsensitive feature (n >= 2)");
  if (mu.size() != n - 1 || mu0.size() != n - 1) throw InputError("benchmark needs n-1 means per group");
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!(mu[i] >= 0.0 && mu[i] <= 1.0 && mu0[i] >= 0.0 && mu0[i] <= 1.0)) {
      throw InputError("benchmark means must lie in [0,1]");
    }
  }
  if (!(sigma > 0.0)) throw InputError("benchmark sigma must be positive");
}

double SynthSpec::label_threshold() const {
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) s += mu[i] + mu0[i];
  return 0.5 * s;
}

SynthSpec random_spec(std::size_t n, std::size_t samples, std::uint64_t seed, double sigma) {
  SynthSpec spec;
  spec.n = n;
  spec.samples = samples;
  spec.seed = seed;
  spec.sigma = sigma;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    spec.mu.push_back(uniform01(rng()));
    spec.mu0.push_back(uniform01(rng()));
  }
  spec.validate();
  return spec;
}

namespace {

class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : rng_(seed) {}

  int bernoulli(double p) { return uniform01(rng_()) < p ? 1 : 0; }

  double standard() {
    if (spare_) {
      const double z = *spare_;
      spare_.reset();
      return z;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform01(rng_());
    const double u2 = uniform01(rng_());
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 rng_;
  std::optional<double> spare_;
};

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

Table generate(const SynthSpec& spec) {
  spec.validate();
  Table t;
  t.header.push_back("A");
  for (std::size_t i = 1; i < spec.n; ++i) t.header.push_back("X" + std::to_string(i));
  t.header.push_back("Y");
  Gaussian g(spec.seed);
  const double cut = spec.label_threshold();
  t.rows.reserve(spec.samples);
  for (std::size_t r = 0; r < spec.samples; ++r) {
    std::vector<std::string> row;
    const int a = g.bernoulli(0.5);
    row.push_back(std::to_string(a));
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < spec.n; ++i) {
      const double x = (a ? spec.mu[i] : spec.mu0[i]) + spec.sigma * g.standard();
      sum += x;
      row.push_back(shortest(x));
    }
    row.push_back(sum >= cut ? "1" : "0");
    t.rows.push_back(std::move(row));
    t.lines.push_back(r + 2);
  }
  return t;
}

clf::LinearClassifier unit_classifier(const SynthSpec& spec) {
  clf::LinearClassifier c;
  c.features.push_back({"A", clf::Role::Sensitive, clf::Kind::Boolean});
  c.weights.push_back(0.0);
  c.category_weights.emplace_back();
  for (std::size_t i = 1; i < spec.n; ++i) {
    c.features.push_back({"X" + std::to_string(i), clf::Role::Nonsensitive, clf::Kind::Continuous});
    c.weights.push_back(1.0);
    c.category_weights.emplace_back();
  }
  c.bias = spec.label_threshold();
  return c;
}

AnalyticPpv analytic_ppv(const std::vector<double>& weights, double weight_a, double bias, const SynthSpec& spec) {
  spec.validate();
  if (weights.size() != spec.n - 1) throw InputError("analytic DI needs one weight per nonsensitive feature");
  double m1 = 0.0, m0 = 0.0, ww = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    m1 += weights[i] * spec.mu[i];
    m0 += weights[i] * spec.mu0[i];
    ww += weights[i] * weights[i];
  }
  const double sd = spec.sigma * std::sqrt(ww);
  auto positive = [&](double mean, double cut) {
    if (sd == 0.0) return mean >= cut ? 1.0 : 0.0;
    return 1.0 - normal_cdf((cut - mean) / sd);
  };
  AnalyticPpv out;
  out.ppv_a1 = positive(m1, bias - weight_a);
  out.ppv_a0 = positive(m0, bias);
  const double hi = std::max(out.ppv_a1, out.ppv_a0);
  const double lo = std::min(out.ppv_a1, out.ppv_a0);
  out.di = hi <= 0.0 ? 1.0 : lo / hi;
  return out;
}

double analytic_di(const std::vector<double>& weights, double weight_a, double bias, const SynthSpec& spec) {
  return analytic_ppv(weights, weight_a, bias, spec).di;
}

double joint_enumeration_oracle(const clf::QuantizedClassifier& qclf, const FeatureDistribution& dist,
                                const std::optional<metrics::Group>& group, int outcome) {
  std::vector<std::string> vars;
  std::set<std::string> seen;
  for (const auto& f : qclf.features) {
    if (seen.insert(f.name).second) vars.push_back(f.name);
  }
  for (const auto& n : dist.net.dag.nodes) {
    if (seen.insert(n).second) vars.push_back(n);
  }
  if (vars.size() > 20) throw ResourceLimitError("joint enumeration is limited to 20 variables");
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < vars.size(); ++i) pos[vars[i]] = i;

  std::vector<std::int64_t> weight(vars.size(), 0);
  for (std::size_t i = 0; i < qclf.features.size(); ++i) weight[pos.at(qclf.features[i].name)] += qclf.weights[i];

  // Groups outside the network are categorical over their members.
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::vector<double>> group_probs;
  std::set<std::string> grouped;
  for (const auto& g : qclf.groups()) {
    if (dist.net.has_node(g.members.front())) continue;
    std::vector<std::size_t> idx;
    std::vector<double> q;
    double total = 0.0;
    for (const auto& m : g.members) {
      idx.push_back(pos.at(m));
      q.push_back(dist.marginals.at(m));
      total += dist.marginals.at(m);
      grouped.insert(m);
    }
    if (total <= 0.0) throw InputError("indicator group '" + g.source + "' has zero total mass");
    for (double& v : q) v /= total;
    groups.push_back(std::move(idx));
    group_probs.push_back(std::move(q));
  }
  struct NetNode {
    std::size_t var;
    std::vector<std::size_t> parents;
    const std::vector<double>* table;
  };
  std::vector<NetNode> net_nodes;
  for (const auto& n : dist.net.dag.nodes) {
    const auto& c = dist.net.cpt(n);
    NetNode nn{pos.at(n), {}, &c.table};
    for (const auto& p : c.parents) nn.parents.push_back(pos.at(p));
    net_nodes.push_back(std::move(nn));
  }
  std::vector<std::pair<std::size_t, double>> singles;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (dist.net.has_node(vars[i]) || grouped.count(vars[i])) continue;
    singles.emplace_back(i, dist.marginals.at(vars[i]));
  }
  std::map<std::size_t, int> condition;
  if (group) {
    for (const auto& [name, v] : metrics::group_assignment(qclf, *group)) condition[pos.at(name)] = v;
  }

  double hit = 0.0, slice = 0.0;
  const std::uint64_t total = std::uint64_t{1} << vars.size();
  std::vector<int> x(vars.size());
  for (std::uint64_t bits = 0; bits < total; ++bits) {
    for (std::size_t i = 0; i < vars.size(); ++i) x[i] = static_cast<int>((bits >> i) & 1U);
    bool in_slice = true;
    for (const auto& [i, v] : condition) in_slice = in_slice && x[i] == v;
    if (!in_slice) continue;
    double p = 1.0;
    for (const auto& [i, m] : singles) p *= x[i] ? m : 1.0 - m;
    for (std::size_t g = 0; g < groups.size() && p > 0.0; ++g) {
      int ones = 0;
      double q = 0.0;
      for (std::size_t j = 0; j < groups[g].size(); ++j) {
        if (x[groups[g][j]]) {
          ++ones;
          q = group_probs[g][j];
        }
      }
      p *= ones == 1 ? q : 0.0;
    }
    for (const auto& nn : net_nodes) {
      if (p == 0.0) break;
      std::size_t row = 0;
      for (auto par : nn.parents) row = (row << 1) | static_cast<std::size_t>(x[par]);
      const double c = (*nn.table)[row];
      p *= x[nn.var] ? c : 1.0 - c;
    }
    if (p == 0.0) continue;
    slice += p;
    std::int64_t score = 0;
    for (std::size_t i = 0; i < vars.size(); ++i) {
      if (x[i]) score += weight[i];
    }
    const int yhat = score >= qclf.threshold ? 1 : 0;
    if (yhat == outcome) hit += p;
  }
  if (slice <= 0.0) throw InputError("conditioning group has probability zero");
  return hit / slice;
}

}  // namespace fvgm::synth
