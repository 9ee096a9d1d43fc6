#include "fvgm/s3p.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "fvgm/error.hpp"

namespace fvgm::s3p {

void S3PInstance::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& v : variables) {
    if (!seen.insert(v.name).second) {
      throw InputError("duplicate variable name '" + v.name + "'");
    }
    if (v.quantifier.kind == QuantifierKind::Random &&
        !(v.quantifier.p >= 0.0 && v.quantifier.p <= 1.0)) {
      throw InputError("variable '" + v.name + "' has probability outside [0,1]");
    }
  }
}

std::size_t S3PInstance::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (variables[i].name == name) return i;
  }
  throw InputError("unknown variable '" + name + "'");
}

WeightBounds weight_bounds(const S3PInstance& instance) {
  WeightBounds b;
  for (const auto& v : instance.variables) {
    b.w_neg += std::min<std::int64_t>(v.weight, 0);
    b.w_pos += std::max<std::int64_t>(v.weight, 0);
    if (v.quantifier.kind == QuantifierKind::Exists) b.w_exists += std::max<std::int64_t>(v.weight, 0);
    if (v.quantifier.kind == QuantifierKind::Forall) b.w_forall += std::min<std::int64_t>(v.weight, 0);
  }
  return b;
}

std::int64_t memo_bound(const S3PInstance& instance) {
  const auto b = weight_bounds(instance);
  std::int64_t chance = 0;
  for (const auto& v : instance.variables) {
    if (!v.quantifier.is_choice()) ++chance;
  }
  return chance * (instance.threshold - b.w_neg - b.w_exists - b.w_forall);
}

std::size_t memo_budget_from_env() {
  if (const char* env = std::getenv("FVGM_MEMO_BUDGET")) {
    char* end = nullptr;
    const unsigned long long parsed = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && parsed > 0) return static_cast<std::size_t>(parsed);
  }
  return kDefaultMemoBudget;
}

S3PInstance reorder(const S3PInstance& instance) {
  const auto b = weight_bounds(instance);
  const bool descending = 2 * instance.threshold <= b.w_pos - b.w_neg;
  std::vector<QuantifiedVariable> exists, forall, random;
  for (const auto& v : instance.variables) {
    switch (v.quantifier.kind) {
      case QuantifierKind::Exists: exists.push_back(v); break;
      case QuantifierKind::Forall: forall.push_back(v); break;
      case QuantifierKind::Random: random.push_back(v); break;
    }
  }
  auto by_weight = [descending](const QuantifiedVariable& a, const QuantifiedVariable& c) {
    return descending ? a.weight > c.weight : a.weight < c.weight;
  };
  S3PInstance out;
  out.threshold = instance.threshold;
  for (auto* cluster : {&exists, &forall, &random}) {
    std::stable_sort(cluster->begin(), cluster->end(), by_weight);
    out.variables.insert(out.variables.end(), cluster->begin(), cluster->end());
  }
  return out;
}

namespace {

struct MemoKey {
  std::uint32_t index;
  std::int64_t residual;
  bool operator==(const MemoKey&) const = default;
};

struct MemoKeyHash {
  std::size_t operator()(const MemoKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.residual) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(k.index) + 0x7F4A7C15ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

struct Frame {
  std::uint32_t index;
  std::int64_t residual;
  // choice: 0 launch, 1 waiting, 4 done
  // random: 0 launch B=1, 1 waiting, 2 launch B=0, 3 waiting, 4 done
  std::uint8_t stage;
  double taken;
  double skipped;
};

std::string budget_message(const S3PInstance& instance, std::size_t budget) {
  const auto b = weight_bounds(instance);
  std::ostringstream os;
  os << "memo budget of " << budget << " entries exceeded (memo bound "
     << "(n-n')(tau+|w_neg|-w_exists-w_forall) = " << memo_bound(instance)
     << ", residual window (" << b.w_neg << ", " << b.w_pos << "])";
  return os.str();
}

}  // namespace

S3PSolution solve(const S3PInstance& input, const SolveOptions& options) {
  input.validate();
  const S3PInstance instance = options.reorder ? reorder(input) : input;
  const auto& vars = instance.variables;
  const std::size_t n = vars.size();

  // Suffix sums of negative and positive weights: dp(i, t) is 1 when
  // t <= suffix_neg[i] and 0 when t > suffix_pos[i].
  std::vector<std::int64_t> suffix_neg(n + 1, 0), suffix_pos(n + 1, 0);
  for (std::size_t i = n; i-- > 0;) {
    suffix_neg[i] = suffix_neg[i + 1] + std::min<std::int64_t>(vars[i].weight, 0);
    suffix_pos[i] = suffix_pos[i + 1] + std::max<std::int64_t>(vars[i].weight, 0);
  }

  S3PSolution sol;
  for (const auto& v : vars) {
    sol.order.push_back(v.name);
    if (v.quantifier.kind == QuantifierKind::Exists) sol.choice_assignment[v.name] = v.weight > 0 ? 1 : 0;
    if (v.quantifier.kind == QuantifierKind::Forall) sol.choice_assignment[v.name] = v.weight < 0 ? 1 : 0;
  }

  std::unordered_map<MemoKey, double, MemoKeyHash> memo;
  std::vector<Frame> stack;
  stack.reserve(n + 1);

  auto record = [&](std::size_t i, std::int64_t t, double value, bool terminal, bool hit) {
    if (options.record_trace) sol.trace.push_back({i, t, value, terminal, hit});
  };

  // Resolves dp(i, t) without a frame when a termination bound or memo entry applies.
  auto resolve = [&](std::size_t i, std::int64_t t, double& out) {
    ++sol.stats.dp_calls;
    if (t <= suffix_neg[i]) {
      out = 1.0;
      record(i, t, out, true, false);
      return true;
    }
    if (t > suffix_pos[i]) {
      out = 0.0;
      record(i, t, out, true, false);
      return true;
    }
    if (!vars[i].quantifier.is_choice()) {
      auto it = memo.find({static_cast<std::uint32_t>(i), t});
      if (it != memo.end()) {
        out = it->second;
        record(i, t, out, false, true);
        return true;
      }
    }
    return false;
  };

  auto deliver = [](Frame& f, double v) {
    if (f.stage == 1 || f.stage == 3) {
      (f.stage == 1 ? f.taken : f.skipped) = v;
      f.stage = f.stage == 1 ? 2 : 4;
    }
  };

  double result = 0.0;
  if (!resolve(0, instance.threshold, result)) {
    stack.push_back({0, instance.threshold, 0, 0.0, 0.0});
  }
  while (!stack.empty()) {
    Frame& f = stack.back();
    const auto& var = vars[f.index];
    const bool choice = var.quantifier.is_choice();
    if (f.stage == 0 || f.stage == 2) {
      std::int64_t child = f.residual;
      if (choice) {
        child -= var.quantifier.kind == QuantifierKind::Exists ? std::max<std::int64_t>(var.weight, 0)
                                                                : std::min<std::int64_t>(var.weight, 0);
        f.stage = 3;  // a choice node has a single child; reuse the second slot
      } else {
        if (f.stage == 0) child -= var.weight;
        f.stage += 1;
      }
      double v = 0.0;
      if (resolve(f.index + 1, child, v)) {
        deliver(f, v);
      } else {
        stack.push_back({f.index + 1, child, 0, 0.0, 0.0});
      }
      continue;
    }
    // stage 4: both children known
    double value;
    if (choice) {
      value = f.skipped;
    } else {
      const double p = var.quantifier.p;
      value = p * f.taken + (1.0 - p) * f.skipped;
      if (memo.size() >= options.memo_budget) {
        throw ResourceLimitError(budget_message(instance, options.memo_budget));
      }
      memo.emplace(MemoKey{f.index, f.residual}, value);
    }
    record(f.index, f.residual, value, false, false);
    stack.pop_back();
    if (stack.empty()) {
      result = value;
    } else {
      deliver(stack.back(), value);
    }
  }

  sol.value = result;
  sol.stats.memo_entries = memo.size();
  return sol;
}

S3PSolution brute_force(const S3PInstance& instance) {
  instance.validate();
  const auto& vars = instance.variables;
  if (vars.size() > kBruteForceMaxVariables) {
    throw ResourceLimitError("brute force limited to " + std::to_string(kBruteForceMaxVariables) +
                             " variables, instance has " + std::to_string(vars.size()));
  }
  std::vector<std::size_t> ex, fa, rnd;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    switch (vars[i].quantifier.kind) {
      case QuantifierKind::Exists: ex.push_back(i); break;
      case QuantifierKind::Forall: fa.push_back(i); break;
      case QuantifierKind::Random: rnd.push_back(i); break;
    }
  }

  auto chance_probability = [&](std::int64_t fixed_sum) {
    double total = 0.0;
    for (std::uint64_t mask = 0; mask < (1ULL << rnd.size()); ++mask) {
      double prob = 1.0;
      std::int64_t sum = fixed_sum;
      for (std::size_t j = 0; j < rnd.size(); ++j) {
        const auto& v = vars[rnd[j]];
        if (mask >> j & 1U) {
          prob *= v.quantifier.p;
          sum += v.weight;
        } else {
          prob *= 1.0 - v.quantifier.p;
        }
      }
      if (sum >= instance.threshold) total += prob;
    }
    return total;
  };

  auto masked_sum = [&](const std::vector<std::size_t>& idx, std::uint64_t mask) {
    std::int64_t s = 0;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      if (mask >> j & 1U) s += vars[idx[j]].weight;
    }
    return s;
  };

  S3PSolution sol;
  double best = -1.0;
  std::uint64_t best_e = 0, best_a = 0;
  for (std::uint64_t em = 0; em < (1ULL << ex.size()); ++em) {
    double worst = 2.0;
    std::uint64_t worst_a = 0;
    for (std::uint64_t am = 0; am < (1ULL << fa.size()); ++am) {
      const double v = chance_probability(masked_sum(ex, em) + masked_sum(fa, am));
      if (v < worst) {
        worst = v;
        worst_a = am;
      }
    }
    if (worst > best) {
      best = worst;
      best_e = em;
      best_a = worst_a;
    }
  }
  sol.value = best;
  for (std::size_t j = 0; j < ex.size(); ++j) sol.choice_assignment[vars[ex[j]].name] = (best_e >> j) & 1U;
  for (std::size_t j = 0; j < fa.size(); ++j) sol.choice_assignment[vars[fa[j]].name] = (best_a >> j) & 1U;
  for (const auto& v : vars) sol.order.push_back(v.name);
  return sol;
}

}  // namespace fvgm::s3p
