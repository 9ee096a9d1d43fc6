#include "fvgm/s3p_bn.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "fvgm/error.hpp"

namespace fvgm::s3p {

void CorrelatedInstance::validate() const {
  instance.validate();
  std::set<std::string> choice;
  for (const auto& v : instance.variables) {
    if (v.quantifier.is_choice()) choice.insert(v.name);
  }
  net.validate(choice);
  for (const auto& n : net.dag.nodes) {
    bool found = false;
    for (const auto& v : instance.variables) found = found || v.name == n;
    if (!found) throw InputError("network node '" + n + "' is not an instance variable");
  }
}

CorrelatedInstance order_for_bn(const CorrelatedInstance& ci) {
  const auto& vars = ci.instance.variables;
  std::map<std::string, const QuantifiedVariable*> by_name;
  for (const auto& v : vars) by_name[v.name] = &v;

  std::vector<QuantifiedVariable> choice_in, chance_in;
  for (const auto& n : topo_sort(ci.net)) {
    auto it = by_name.find(n);
    if (it == by_name.end()) throw InputError("network node '" + n + "' is not an instance variable");
    (it->second->quantifier.is_choice() ? choice_in : chance_in).push_back(*it->second);
  }
  S3PInstance choice_out, chance_out;
  choice_out.threshold = chance_out.threshold = ci.instance.threshold;
  for (const auto& v : vars) {
    if (ci.net.has_node(v.name)) continue;
    (v.quantifier.is_choice() ? choice_out : chance_out).variables.push_back(v);
  }
  // The weight-sort direction depends on the bounds of the whole instance.
  const auto b = weight_bounds(ci.instance);
  const bool descending = 2 * ci.instance.threshold <= b.w_pos - b.w_neg;
  auto sort_block = [descending](std::vector<QuantifiedVariable>& block) {
    std::stable_sort(block.begin(), block.end(), [descending](const auto& a, const auto& c) {
      if (a.quantifier.kind != c.quantifier.kind) return a.quantifier.kind < c.quantifier.kind;
      return descending ? a.weight > c.weight : a.weight < c.weight;
    });
  };
  sort_block(choice_out.variables);
  sort_block(chance_out.variables);

  CorrelatedInstance out;
  out.net = ci.net;
  out.instance.threshold = ci.instance.threshold;
  for (auto* block : {&choice_in, &choice_out.variables, &chance_in, &chance_out.variables}) {
    out.instance.variables.insert(out.instance.variables.end(), block->begin(), block->end());
  }
  return out;
}

std::int64_t correlated_memo_bound(const CorrelatedInstance& ci) {
  const auto b = weight_bounds(ci.instance);
  std::int64_t count = 0, w_exists = 0, w_forall = 0;
  for (const auto& v : ci.instance.variables) {
    if (ci.net.has_node(v.name)) continue;
    if (v.quantifier.kind == QuantifierKind::Exists) {
      w_exists += std::max<std::int64_t>(v.weight, 0);
    } else if (v.quantifier.kind == QuantifierKind::Forall) {
      w_forall += std::min<std::int64_t>(v.weight, 0);
    } else {
      ++count;
    }
  }
  return count * (ci.instance.threshold - b.w_neg - w_exists - w_forall);
}

namespace {

enum class Role : std::uint8_t { ChoiceOut, ChoiceIn, ChanceIn, ChanceOut };

struct VarInfo {
  Role role;
  std::vector<std::size_t> parents;  // instance positions, CPT order
  const std::vector<double>* table = nullptr;
};

using Decisions = std::vector<std::pair<std::uint32_t, std::uint8_t>>;

struct Frame {
  std::uint32_t index;
  std::int64_t residual;
  // 0 launch B=1, 1 waiting, 2 launch B=0, 3 waiting, 4 done
  std::uint8_t stage;
  double p;
  double taken;
  double skipped;
  Decisions taken_dec;
  Decisions skipped_dec;
};

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

}  // namespace

S3PSolution solve_correlated(const CorrelatedInstance& ci, const SolveOptions& options) {
  ci.validate();
  const auto& vars = ci.instance.variables;
  const std::size_t n = vars.size();

  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < n; ++i) pos[vars[i].name] = i;

  std::vector<VarInfo> info(n);
  std::size_t last_network = 0;
  bool any_network = false;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = vars[i];
    if (!ci.net.has_node(v.name)) {
      info[i].role = v.quantifier.is_choice() ? Role::ChoiceOut : Role::ChanceOut;
      continue;
    }
    any_network = true;
    last_network = i;
    info[i].role = v.quantifier.is_choice() ? Role::ChoiceIn : Role::ChanceIn;
    const auto& cpt = ci.net.cpt(v.name);
    info[i].table = &cpt.table;
    for (const auto& p : cpt.parents) {
      const auto pp = pos.at(p);
      if (pp >= i) {
        throw OrderingError("network variable '" + v.name + "' appears before its parent '" + p + "'");
      }
      info[i].parents.push_back(pp);
    }
  }
  // Chance variables outside the network are memoized only once no network
  // variable remains, since earlier sub-problems still depend on the context u.
  const std::size_t memo_from = any_network ? last_network + 1 : 0;

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
  std::map<std::size_t, int> first_decision;

  std::vector<std::uint8_t> value(n, 0);
  std::unordered_map<MemoKey, double, MemoKeyHash> memo;
  std::vector<Frame> stack;
  stack.reserve(n + 1);

  auto record = [&](std::size_t i, std::int64_t t, double v, bool terminal, bool hit) {
    if (options.record_trace) sol.trace.push_back({i, t, v, terminal, hit});
  };

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
    if (info[i].role == Role::ChanceOut && i >= memo_from) {
      auto it = memo.find({static_cast<std::uint32_t>(i), t});
      if (it != memo.end()) {
        out = it->second;
        record(i, t, out, false, true);
        return true;
      }
    }
    return false;
  };

  auto make_frame = [&](std::size_t i, std::int64_t t) {
    Frame f{static_cast<std::uint32_t>(i), t, 0, 0.0, 0.0, 0.0, {}, {}};
    if (info[i].role == Role::ChanceIn) {
      std::size_t row = 0;
      for (auto pp : info[i].parents) row = (row << 1) | value[pp];
      f.p = (*info[i].table)[row];
    } else if (info[i].role == Role::ChanceOut) {
      f.p = vars[i].quantifier.p;
    }
    return f;
  };

  auto deliver = [](Frame& f, double v, Decisions&& dec) {
    if (f.stage == 1) {
      f.taken = v;
      f.taken_dec = std::move(dec);
      f.stage = 2;
    } else if (f.stage == 3) {
      f.skipped = v;
      f.skipped_dec = std::move(dec);
      f.stage = 4;
    }
  };

  double result = 0.0;
  Decisions root_decisions;
  if (!resolve(0, ci.instance.threshold, result)) stack.push_back(make_frame(0, ci.instance.threshold));

  while (!stack.empty()) {
    Frame& f = stack.back();
    const std::size_t i = f.index;
    const auto& var = vars[i];
    const Role role = info[i].role;

    if (f.stage == 0 || f.stage == 2) {
      std::int64_t child = f.residual;
      bool branch_taken = f.stage == 0;
      if (role == Role::ChoiceOut) {
        child -= var.quantifier.kind == QuantifierKind::Exists ? std::max<std::int64_t>(var.weight, 0)
                                                                : std::min<std::int64_t>(var.weight, 0);
        f.stage = 3;
      } else {
        // Zero-probability branches of chance variables contribute nothing.
        if (role == Role::ChanceIn || role == Role::ChanceOut) {
          if (branch_taken && f.p == 0.0) {
            f.stage = 1;
            deliver(f, 0.0, {});
            continue;
          }
          if (!branch_taken && f.p == 1.0) {
            f.stage = 3;
            deliver(f, 0.0, {});
            continue;
          }
        }
        if (branch_taken) child -= var.weight;
        if (role == Role::ChoiceIn || role == Role::ChanceIn) value[i] = branch_taken ? 1 : 0;
        f.stage += 1;
      }
      double v = 0.0;
      if (resolve(i + 1, child, v)) {
        deliver(f, v, {});
      } else {
        stack.push_back(make_frame(i + 1, child));
      }
      continue;
    }

    double result_value = 0.0;
    Decisions dec;
    switch (role) {
      case Role::ChoiceOut:
        result_value = f.skipped;
        dec = std::move(f.skipped_dec);
        break;
      case Role::ChoiceIn: {
        const bool exists = var.quantifier.kind == QuantifierKind::Exists;
        const bool pick_one = exists ? f.taken > f.skipped : f.taken < f.skipped;
        result_value = pick_one ? f.taken : f.skipped;
        dec = std::move(pick_one ? f.taken_dec : f.skipped_dec);
        dec.emplace_back(static_cast<std::uint32_t>(i), pick_one ? 1 : 0);
        first_decision.emplace(i, pick_one ? 1 : 0);
        break;
      }
      case Role::ChanceIn:
      case Role::ChanceOut:
        result_value = f.p * f.taken + (1.0 - f.p) * f.skipped;
        if (role == Role::ChanceOut && i >= memo_from) {
          if (memo.size() >= options.memo_budget) {
            throw ResourceLimitError("memo budget of " + std::to_string(options.memo_budget) +
                                     " entries exceeded (correlated memo bound " +
                                     std::to_string(correlated_memo_bound(ci)) + ")");
          }
          memo.emplace(MemoKey{f.index, f.residual}, result_value);
        }
        break;
    }
    record(i, f.residual, result_value, false, false);
    stack.pop_back();
    if (stack.empty()) {
      result = result_value;
      root_decisions = std::move(dec);
    } else {
      deliver(stack.back(), result_value, std::move(dec));
    }
  }

  for (const auto& [i, d] : first_decision) sol.choice_assignment[vars[i].name] = d;
  for (const auto& [i, d] : root_decisions) sol.choice_assignment[vars[i].name] = d;
  sol.value = result;
  sol.stats.memo_entries = memo.size();
  return sol;
}

}  // namespace fvgm::s3p
