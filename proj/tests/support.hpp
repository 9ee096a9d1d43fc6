#pragma once

// Instance generators and independent oracles shared by the unit tests and
// the acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "fvgm/bayesnet.hpp"
#include "fvgm/classifier.hpp"
#include "fvgm/distribution.hpp"
#include "fvgm/s3p.hpp"
#include "fvgm/s3p_bn.hpp"

namespace fvgm::testing {

inline std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline double uniform_real(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Probabilities include exact 0, 1 and 0.5 now and then so pruning and ties get exercised.
inline double random_prob(std::mt19937_64& rng) {
  switch (rng() % 10) {
    case 0: return 0.0;
    case 1: return 1.0;
    case 2: return 0.5;
    default: return uniform_real(rng);
  }
}

/// Random independent instance. `choice` selects which choice kinds may appear:
/// 0 none, 1 Exists only, 2 Forall only, 3 both.
inline s3p::S3PInstance random_instance(std::mt19937_64& rng, std::size_t n, std::int64_t max_w, int choice = 3) {
  s3p::S3PInstance inst;
  std::int64_t pos = 0, neg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    s3p::QuantifiedVariable v;
    v.name = "b" + std::to_string(i);
    v.weight = uniform_int(rng, -max_w, max_w);
    const auto r = rng() % 6;
    if (r == 0 && (choice & 1)) {
      v.quantifier = s3p::Quantifier::exists();
    } else if (r == 1 && (choice & 2)) {
      v.quantifier = s3p::Quantifier::forall();
    } else {
      v.quantifier = s3p::Quantifier::random(random_prob(rng));
    }
    (v.weight > 0 ? pos : neg) += v.weight;
    inst.variables.push_back(v);
  }
  inst.threshold = uniform_int(rng, neg - 1, pos + 1);
  return inst;
}

/// Random correlated instance with |V| <= max_v network nodes. Choice
/// variables are all of one kind (Exists when `maximize`) and never have parents.
inline s3p::CorrelatedInstance random_correlated(std::mt19937_64& rng, std::size_t n, std::size_t max_v,
                                                 std::int64_t max_w, int choice_kind) {
  s3p::CorrelatedInstance ci;
  ci.instance = random_instance(rng, n, max_w, 0);
  for (auto& v : ci.instance.variables) {
    if (choice_kind != 0 && rng() % 5 == 0) {
      v.quantifier = choice_kind == 1 ? s3p::Quantifier::exists() : s3p::Quantifier::forall();
    }
  }
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  const std::size_t v_count = std::min<std::size_t>(n, 2 + rng() % (max_v - 1));
  std::vector<std::string> nodes;
  for (std::size_t k = 0; k < v_count; ++k) nodes.push_back(ci.instance.variables[idx[k]].name);
  auto& net = ci.net;
  net.dag.nodes = nodes;
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    for (std::size_t b = a + 1; b < nodes.size(); ++b) {
      const auto& child = ci.instance.variables[ci.instance.index_of(nodes[b])];
      if (child.quantifier.is_choice()) continue;
      if (rng() % 2 == 0) net.dag.edges.emplace_back(nodes[a], nodes[b]);
    }
  }
  for (const auto& n_name : nodes) {
    bn::Cpt c;
    c.child = n_name;
    c.parents = net.dag.parents(n_name);
    c.table.resize(std::size_t{1} << c.parents.size());
    for (double& p : c.table) p = random_prob(rng);
    net.cpts[n_name] = c;
  }
  net.dag.normalize();
  return ci;
}

/// Exhaustive evaluation written against the definition only: optimize over
/// all choice assignments (Exists outer max, Forall inner min) and sum the
/// exact probability of every chance assignment reaching the threshold.
/// Network variables take their CPT row; the rest use their own p.
inline double enumerate_oracle(const s3p::S3PInstance& inst, const bn::BayesNet& net = {}) {
  const auto& vars = inst.variables;
  const std::size_t n = vars.size();
  std::vector<std::size_t> ex, fa, ch;
  for (std::size_t i = 0; i < n; ++i) {
    switch (vars[i].quantifier.kind) {
      case s3p::QuantifierKind::Exists: ex.push_back(i); break;
      case s3p::QuantifierKind::Forall: fa.push_back(i); break;
      case s3p::QuantifierKind::Random: ch.push_back(i); break;
    }
  }
  std::vector<int> x(n, 0);
  std::vector<const bn::Cpt*> cpt(n, nullptr);
  std::vector<std::vector<std::size_t>> parents(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!net.has_node(vars[i].name)) continue;
    cpt[i] = &net.cpt(vars[i].name);
    for (const auto& p : cpt[i]->parents) parents[i].push_back(inst.index_of(p));
  }
  auto expectation = [&]() {
    double total = 0.0;
    for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << ch.size()); ++bits) {
      for (std::size_t k = 0; k < ch.size(); ++k) x[ch[k]] = static_cast<int>((bits >> k) & 1U);
      double pr = 1.0;
      std::int64_t sum = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (x[i]) sum += vars[i].weight;
        if (vars[i].quantifier.is_choice()) continue;
        double p = vars[i].quantifier.p;
        if (cpt[i]) {
          std::size_t row = 0;
          for (auto j : parents[i]) row = (row << 1) | static_cast<std::size_t>(x[j]);
          p = cpt[i]->table[row];
        }
        pr *= x[i] ? p : 1.0 - p;
      }
      if (sum >= inst.threshold) total += pr;
    }
    return total;
  };
  double best = -1.0;
  for (std::uint64_t eb = 0; eb < (std::uint64_t{1} << ex.size()); ++eb) {
    for (std::size_t k = 0; k < ex.size(); ++k) x[ex[k]] = static_cast<int>((eb >> k) & 1U);
    double worst = 2.0;
    for (std::uint64_t fb = 0; fb < (std::uint64_t{1} << fa.size()); ++fb) {
      for (std::size_t k = 0; k < fa.size(); ++k) x[fa[k]] = static_cast<int>((fb >> k) & 1U);
      worst = std::min(worst, expectation());
    }
    best = std::max(best, worst);
  }
  return best;
}

/// s -> a -> b with -s + 2a + 3b >= 3, plus an unused independent d.
struct Crafted {
  clf::QuantizedClassifier qclf;
  FeatureDistribution dist;
  static constexpr double pa[2] = {0.2, 0.7};
  static constexpr double pb[2] = {0.1, 0.8};

  Crafted() {
    auto boolean = [](const std::string& name, clf::Role role) {
      return clf::BoolFeature{name, name, role, clf::IndicatorKind::Passthrough, ""};
    };
    qclf.features = {boolean("s", clf::Role::Sensitive), boolean("a", clf::Role::Nonsensitive),
                     boolean("b", clf::Role::Nonsensitive), boolean("d", clf::Role::Nonsensitive)};
    qclf.weights = {-1, 2, 3, 0};
    qclf.threshold = 3;
    auto& net = dist.net;
    net.dag.nodes = {"a", "b", "s"};
    net.dag.edges = {{"a", "b"}, {"s", "a"}};
    net.cpts["s"] = {"s", {}, {0.4}};
    net.cpts["a"] = {"a", {"s"}, {pa[0], pa[1]}};
    net.cpts["b"] = {"b", {"a"}, {pb[0], pb[1]}};
    dist.marginals = {{"s", 0.4}, {"a", 0.4}, {"b", 0.38}, {"d", 0.3}};
  }

  static double bern(double p, int x) { return x ? p : 1.0 - p; }

  /// Group PPV given s when (a, b) follow `pab(s, a, b)`.
  static double ppv(int s, const std::function<double(int, int, int)>& pab) {
    double total = 0.0;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        if (-s + 2 * a + 3 * b >= 3) total += pab(s, a, b);
      }
    }
    return total;
  }

  /// Hand-derived group PPVs with the given features replaced by fair coins.
  /// An orphaned b averages its rows with a's pre-ablation marginal.
  static double expected_ppv(int s, bool drop_a, bool drop_b) {
    const double pa_marg = 0.6 * pa[0] + 0.4 * pa[1];
    const double pb_avg = (1 - pa_marg) * pb[0] + pa_marg * pb[1];
    return ppv(s, [&](int sv, int a, int b) {
      const double fa = drop_a ? 0.5 : bern(pa[sv], a);
      double fb = 0.5;
      if (!drop_b) fb = drop_a ? bern(pb_avg, b) : bern(pb[a], b);
      return fa * fb;
    });
  }
};

}  // namespace fvgm::testing
