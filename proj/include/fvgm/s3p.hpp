#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fvgm::s3p {

enum class QuantifierKind { Exists, Forall, Random };

/// Exists maximizes, Forall minimizes, Random carries Pr[B = 1].
struct Quantifier {
  QuantifierKind kind = QuantifierKind::Random;
  double p = 0.5;

  static Quantifier exists() { return {QuantifierKind::Exists, 0.0}; }
  static Quantifier forall() { return {QuantifierKind::Forall, 0.0}; }
  static Quantifier random(double p) { return {QuantifierKind::Random, p}; }

  bool is_choice() const { return kind != QuantifierKind::Random; }
};

struct QuantifiedVariable {
  std::string name;
  std::int64_t weight = 0;
  Quantifier quantifier;
};

/// Pr[sum_i w_i B_i >= threshold] under the variables' quantifiers.
struct S3PInstance {
  std::vector<QuantifiedVariable> variables;
  std::int64_t threshold = 0;

  /// Throws InputError on duplicate names or p outside [0, 1].
  void validate() const;
  std::size_t index_of(const std::string& name) const;
};

struct WeightBounds {
  std::int64_t w_neg = 0;
  std::int64_t w_pos = 0;
  std::int64_t w_exists = 0;
  std::int64_t w_forall = 0;
};

WeightBounds weight_bounds(const S3PInstance& instance);

/// (n - n')(tau + |w_neg| - w_exists - w_forall); may be non-positive, in
/// which case the instance is decided by the termination bounds alone.
std::int64_t memo_bound(const S3PInstance& instance);

struct SolverStats {
  std::size_t memo_entries = 0;
  std::size_t dp_calls = 0;
};

/// One evaluated dp(index, residual) node, recorded in completion order.
/// `index` is the 0-based position in the solved (possibly reordered) order.
struct TraceNode {
  std::size_t index = 0;
  std::int64_t residual = 0;
  double value = 0.0;
  bool terminal = false;
  bool memo_hit = false;
};

struct S3PSolution {
  double value = 0.0;
  std::map<std::string, int> choice_assignment;
  SolverStats stats;
  /// Variable names in the order the solver processed them.
  std::vector<std::string> order;
  std::vector<TraceNode> trace;
};

constexpr std::size_t kDefaultMemoBudget = 50'000'000;

struct SolveOptions {
  /// Apply the choice-first / weight-sorted ordering before solving.
  bool reorder = true;
  bool record_trace = false;
  std::size_t memo_budget = kDefaultMemoBudget;
};

/// Memo budget from FVGM_MEMO_BUDGET if set, else kDefaultMemoBudget.
std::size_t memo_budget_from_env();

S3PSolution solve(const S3PInstance& instance, const SolveOptions& options = {});

/// Exists cluster, then Forall cluster, then Random cluster; each sorted by
/// weight, descending when 2*tau <= w_pos - w_neg and ascending otherwise.
S3PInstance reorder(const S3PInstance& instance);

constexpr std::size_t kBruteForceMaxVariables = 25;

/// Exhaustive reference: max over Exists assignments of min over Forall
/// assignments of the exact expectation over Random assignments.
S3PSolution brute_force(const S3PInstance& instance);

}  // namespace fvgm::s3p
