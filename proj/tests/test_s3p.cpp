#include <chrono>
#include <random>

#include "doctest.h"
#include "fvgm/error.hpp"
#include "fvgm/s3p.hpp"
#include "support.hpp"

using namespace fvgm;
using s3p::Quantifier;

namespace {

s3p::S3PInstance pqrs(Quantifier p_quant) {
  s3p::S3PInstance inst;
  inst.variables = {{"P", 1, p_quant},
                    {"Q", 1, Quantifier::random(0.4)},
                    {"R", 1, Quantifier::random(0.5)},
                    {"S", -1, Quantifier::random(0.3)}};
  inst.threshold = 2;
  return inst;
}

const s3p::TraceNode* find_node(const s3p::S3PSolution& sol, std::size_t index, std::int64_t residual) {
  for (const auto& t : sol.trace) {
    if (t.index == index && t.residual == residual) return &t;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("small worked instance: max and min over the sensitive bit") {
  const auto hi = s3p::solve(pqrs(Quantifier::exists()));
  CHECK(hi.value == doctest::Approx(0.55).epsilon(1e-12));
  CHECK(hi.choice_assignment.at("P") == 1);
  const auto lo = s3p::solve(pqrs(Quantifier::forall()));
  CHECK(lo.value == doctest::Approx(0.14).epsilon(1e-12));
  CHECK(lo.choice_assignment.at("P") == 0);
}

TEST_CASE("trace exposes interior nodes in the given order") {
  s3p::SolveOptions opts;
  opts.reorder = false;
  opts.record_trace = true;
  const auto sol = s3p::solve(pqrs(Quantifier::exists()), opts);
  const auto* a = find_node(sol, 2, 0);
  const auto* b = find_node(sol, 2, 1);
  REQUIRE(a);
  REQUIRE(b);
  CHECK(std::abs(a->value - 0.85) < 1e-12);
  CHECK(std::abs(b->value - 0.35) < 1e-12);
}

TEST_CASE("empty instance is the threshold indicator") {
  s3p::S3PInstance inst;
  inst.threshold = 0;
  CHECK(s3p::solve(inst).value == 1.0);
  inst.threshold = 1;
  CHECK(s3p::solve(inst).value == 0.0);
  inst.threshold = -3;
  CHECK(s3p::solve(inst).value == 1.0);
}

TEST_CASE("choice variables shift the threshold by their favourable weight") {
  s3p::S3PInstance inst;
  inst.variables = {{"e", -4, Quantifier::exists()}, {"f", 3, Quantifier::forall()}, {"r", 2, Quantifier::random(0.25)}};
  inst.threshold = 1;
  // e picks 0, f picks 0, so only r can reach 1.
  const auto sol = s3p::solve(inst);
  CHECK(sol.value == doctest::Approx(0.25));
  CHECK(sol.choice_assignment.at("e") == 0);
  CHECK(sol.choice_assignment.at("f") == 0);
}

TEST_CASE("solve agrees with exhaustive enumeration on random instances") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 300; ++t) {
    const auto inst = testing::random_instance(rng, 1 + rng() % 10, 8, static_cast<int>(rng() % 3));
    const double oracle = testing::enumerate_oracle(inst);
    CHECK(std::abs(s3p::solve(inst).value - oracle) <= 1e-9);
    CHECK(std::abs(s3p::brute_force(inst).value - oracle) <= 1e-9);
    s3p::SolveOptions raw;
    raw.reorder = false;
    CHECK(std::abs(s3p::solve(inst, raw).value - oracle) <= 1e-9);
  }
}

TEST_CASE("memo size respects the pseudo-polynomial bound") {
  std::mt19937_64 rng(5);
  int checked = 0;
  for (int t = 0; t < 400; ++t) {
    const auto inst = testing::random_instance(rng, 2 + rng() % 12, 20, static_cast<int>(rng() % 3));
    const auto bound = s3p::memo_bound(inst);
    if (bound <= 0) continue;
    ++checked;
    CHECK(static_cast<std::int64_t>(s3p::solve(inst).stats.memo_entries) <= bound);
  }
  CHECK(checked > 50);
}

TEST_CASE("reorder keeps the multiset of variables") {
  std::mt19937_64 rng(3);
  const auto inst = testing::random_instance(rng, 12, 9);
  const auto r = s3p::reorder(inst);
  REQUIRE(r.variables.size() == inst.variables.size());
  std::size_t stage = 0;
  for (const auto& v : r.variables) {
    const std::size_t s = v.quantifier.kind == s3p::QuantifierKind::Exists   ? 0
                          : v.quantifier.kind == s3p::QuantifierKind::Forall ? 1
                                                                             : 2;
    CHECK(s >= stage);
    stage = s;
  }
}

TEST_CASE("memo budget is enforced") {
  std::mt19937_64 rng(1);
  s3p::S3PInstance inst;
  for (int i = 0; i < 40; ++i) inst.variables.push_back({"v" + std::to_string(i), 1 + i, Quantifier::random(0.5)});
  inst.threshold = 300;
  s3p::SolveOptions opts;
  opts.memo_budget = 10;
  CHECK_THROWS_AS(s3p::solve(inst, opts), ResourceLimitError);
}

TEST_CASE("invalid instances are rejected") {
  s3p::S3PInstance dup;
  dup.variables = {{"a", 1, Quantifier::random(0.5)}, {"a", 2, Quantifier::random(0.5)}};
  CHECK_THROWS_AS(s3p::solve(dup), InputError);
  s3p::S3PInstance bad_p;
  bad_p.variables = {{"a", 1, Quantifier::random(1.5)}};
  CHECK_THROWS_AS(s3p::solve(bad_p), InputError);
}

TEST_CASE("two hundred random variables solve quickly") {
  std::mt19937_64 rng(2024);
  s3p::S3PInstance inst;
  std::int64_t pos = 0;
  for (int i = 0; i < 200; ++i) {
    const auto w = testing::uniform_int(rng, -100, 100);
    inst.variables.push_back({"x" + std::to_string(i), w, Quantifier::random(testing::uniform_real(rng))});
    if (w > 0) pos += w;
  }
  inst.threshold = pos / 3;
  const auto t0 = std::chrono::steady_clock::now();
  const auto sol = s3p::solve(inst);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(sol.value >= 0.0);
  CHECK(sol.value <= 1.0);
  CHECK(secs < 1.0);
}
