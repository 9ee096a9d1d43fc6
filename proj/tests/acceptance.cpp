// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "fvgm/fif.hpp"
#include "fvgm/metrics.hpp"
#include "fvgm/pipeline.hpp"
#include "fvgm/s3p.hpp"
#include "fvgm/s3p_bn.hpp"
#include "fvgm/synthbench.hpp"
#include "support.hpp"

using namespace fvgm;
using s3p::Quantifier;
using Clock = std::chrono::steady_clock;

namespace {

std::string data(const std::string& name) { return std::string(FVGM_TEST_DATA) + "/" + name; }

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

/// Collects failed checks; the detail string ends up on the criterion line.
struct Checks {
  std::vector<std::string> failures;
  std::string note;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

struct Criterion {
  int id;
  std::string title;
  std::function<void(Checks&)> run;
};

// 1 -------------------------------------------------------------------------

void independent_golden(Checks& c) {
  cli::RunConfig rc;
  rc.classifier_path = data("pqrs_classifier.json");
  rc.bn_path = data("pqrs_independent_bn.json");
  const auto t0 = Clock::now();
  const auto p = cli::prepare_without_data(clf::load_classifier(rc.classifier_path), bn::load(rc.bn_path), rc);
  const auto r = metrics::max_min_ppv(p.qclf, p.dist);
  const double elapsed = ms_since(t0);
  c.expect(std::abs(r.max.ppv - 0.55) <= 1e-9, "max ppv " + fmt(r.max.ppv));
  c.expect(std::abs(r.min.ppv - 0.14) <= 1e-9, "min ppv " + fmt(r.min.ppv));
  c.expect(metrics::to_string(r.max.group) == "P=1", "max group " + metrics::to_string(r.max.group));
  c.expect(metrics::to_string(r.min.group) == "P=0", "min group " + metrics::to_string(r.min.group));
  c.expect(elapsed < 10.0, "runtime " + fmt(elapsed) + " ms");
  c.note = "max 0.55 (P=1), min 0.14 (P=0) in " + fmt(elapsed) + " ms";
}

// 2 -------------------------------------------------------------------------

void correlated_golden(Checks& c) {
  cli::RunConfig rc;
  rc.classifier_path = data("pqrs_classifier.json");
  rc.bn_path = data("pqrs_correlated_bn.json");
  const auto p = cli::prepare_without_data(clf::load_classifier(rc.classifier_path), bn::load(rc.bn_path), rc);
  const auto r = metrics::max_min_ppv(p.qclf, p.dist);
  c.expect(std::abs(r.max.ppv - 0.65) <= 1e-9, "max ppv " + fmt(r.max.ppv));
  c.expect(std::abs(r.min.ppv - 0.105) <= 1e-9, "min ppv " + fmt(r.min.ppv));
  c.expect(metrics::to_string(r.max.group) == "P=1", "max group");
  c.expect(metrics::to_string(r.min.group) == "P=0", "min group");

  // Interior nodes of the correlated solve with P taking its maximizing value.
  auto ci = build_instance(p.qclf, p.dist, SensitiveBinding{SensitiveBinding::Kind::Exists, {}});
  s3p::SolveOptions opts;
  opts.record_trace = true;
  const auto ordered = s3p::order_for_bn(ci);
  const auto sol = s3p::solve_correlated(ordered, opts);
  const std::size_t r_index = ordered.instance.index_of("R");
  bool saw0 = false, saw1 = false;
  for (const auto& t : sol.trace) {
    if (t.index != r_index) continue;
    if (t.residual == 0) saw0 = std::abs(t.value - 0.85) <= 1e-9;
    if (t.residual == 1) saw1 = std::abs(t.value - 0.35) <= 1e-9;
  }
  c.expect(saw0, "trace node at R with residual 0 != 0.85");
  c.expect(saw1, "trace node at R with residual 1 != 0.35");
  c.note = "max 0.65, min 0.105; trace 0.85 / 0.35 at R";
}

// 3 and 5 share the oracle suite ---------------------------------------------

struct SuiteStats {
  std::size_t independent = 0, correlated = 0, bounded = 0, bound_violations = 0;
  double worst = 0.0, seconds = 0.0;
};

SuiteStats oracle_suite() {
  SuiteStats st;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 1 + rng() % 15;
    const auto inst = testing::random_instance(rng, n, 12, static_cast<int>(rng() % 4));
    const auto sol = s3p::solve(inst);
    st.worst = std::max(st.worst, std::abs(sol.value - testing::enumerate_oracle(inst)));
    ++st.independent;
    const auto bound = s3p::memo_bound(inst);
    if (bound > 0) {
      ++st.bounded;
      if (static_cast<std::int64_t>(sol.stats.memo_entries) > bound) ++st.bound_violations;
    }
  }
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng() % 11;
    const auto ci = testing::random_correlated(rng, n, 6, 12, static_cast<int>(rng() % 3));
    const auto sol = s3p::solve_correlated(s3p::order_for_bn(ci));
    st.worst = std::max(st.worst, std::abs(sol.value - testing::enumerate_oracle(ci.instance, ci.net)));
    ++st.correlated;
    const auto bound = s3p::correlated_memo_bound(ci);
    if (bound > 0) {
      ++st.bounded;
      if (static_cast<std::int64_t>(sol.stats.memo_entries) > bound) ++st.bound_violations;
    }
  }
  st.seconds = ms_since(t0) / 1000.0;
  return st;
}

const SuiteStats& suite() {
  static const SuiteStats st = oracle_suite();
  return st;
}

void oracle_equivalence(Checks& c) {
  const auto& st = suite();
  c.expect(st.independent == 500 && st.correlated == 200, "suite size");
  c.expect(st.worst <= 1e-9, "max deviation " + fmt(st.worst));
  c.expect(st.seconds < 60.0, "runtime " + fmt(st.seconds) + " s");
  c.note = "500 independent + 200 correlated, max deviation " + fmt(st.worst) + ", " + fmt(st.seconds) + " s";
}

// 4 -------------------------------------------------------------------------

void order_invariance(Checks& c) {
  std::mt19937_64 rng(777);
  double spread = 0.0;
  for (int t = 0; t < 100; ++t) {
    auto inst = testing::random_instance(rng, 2 + rng() % 14, 15, static_cast<int>(rng() % 4));
    for (bool reorder : {true, false}) {
      s3p::SolveOptions opts;
      opts.reorder = reorder;
      double lo = 2.0, hi = -1.0;
      auto perm = inst;
      for (int k = 0; k < 20; ++k) {
        std::shuffle(perm.variables.begin(), perm.variables.end(), rng);
        const double v = s3p::solve(perm, opts).value;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      spread = std::max(spread, hi - lo);
    }
  }
  c.expect(spread <= 1e-9, "max spread " + fmt(spread));
  c.note = "100 instances x 20 permutations, max spread " + fmt(spread);
}

// 5 -------------------------------------------------------------------------

void memo_bounds(Checks& c) {
  const auto& st = suite();
  c.expect(st.bound_violations == 0, std::to_string(st.bound_violations) + " bound violations");
  c.expect(st.bounded > 0, "no instance had a positive window");

  std::mt19937_64 rng(4242);
  s3p::S3PInstance big;
  std::int64_t pos = 0;
  for (int i = 0; i < 200; ++i) {
    const auto w = testing::uniform_int(rng, -100, 100);
    pos += std::max<std::int64_t>(w, 0);
    big.variables.push_back({"v" + std::to_string(i), w, Quantifier::random(testing::uniform_real(rng))});
  }
  big.threshold = pos / 2;
  const auto t0 = Clock::now();
  const auto sol = s3p::solve(big);
  const double elapsed = ms_since(t0);
  c.expect(elapsed < 1000.0, "200-variable solve took " + fmt(elapsed) + " ms");
  c.expect(static_cast<std::int64_t>(sol.stats.memo_entries) <= s3p::memo_bound(big), "200-variable bound");
  c.note = std::to_string(st.bounded) + " bounded instances, 0 violations; 200 variables in " + fmt(elapsed) +
           " ms (" + std::to_string(sol.stats.memo_entries) + " memo entries)";
}

// 6 -------------------------------------------------------------------------

void analytic_accuracy(Checks& c) {
  cli::BenchSpec spec;
  spec.seed = 1;
  const auto r = cli::run_bench(spec);
  c.expect(r.trials.size() == 60, "trial count " + std::to_string(r.trials.size()));
  const double verifier = r.mean_error();
  const double ablation = r.mean_independent_error();
  c.expect(verifier <= 0.05, "mean error " + fmt(verifier));
  c.expect(verifier < ablation, "not below the independence ablation (" + fmt(ablation) + ")");
  c.note = "mean |DI - analytic| " + fmt(verifier) + " vs " + fmt(ablation) + " without the network";
}

// 7 -------------------------------------------------------------------------

/// s ~ Bern(0.5), z copies s with prob 0.8, x independent; the classifier reads z and x.
cli::Prepared mediated(bool constant_label) {
  clf::LinearClassifier m;
  m.features = {{"s", clf::Role::Sensitive, clf::Kind::Boolean},
                {"z", clf::Role::Nonsensitive, clf::Kind::Boolean},
                {"x", clf::Role::Nonsensitive, clf::Kind::Boolean}};
  m.weights = {0.0, 2.0, 1.0};
  m.category_weights = {{}, {}, {}};
  m.bias = 2.0;
  Table t;
  t.header = {"s", "z", "x", "y"};
  std::mt19937_64 rng(31);
  for (std::size_t r = 0; r < 600; ++r) {
    const int s = static_cast<int>(rng() & 1U);
    const int z = synth::uniform01(rng()) < 0.8 ? s : 1 - s;
    const int x = static_cast<int>(rng() & 1U);
    const int y = constant_label ? 1 : (z + x >= 2 ? 1 : 0);
    t.rows.push_back({std::to_string(s), std::to_string(z), std::to_string(x), std::to_string(y)});
    t.lines.push_back(r + 2);
  }
  cli::RunConfig rc;
  rc.bins = 2;
  rc.multiplier = 1;
  rc.learn_bn = true;
  rc.label = "y";
  return cli::prepare(m, t, rc);
}

cli::Prepared toy(bool learn) {
  cli::RunConfig rc;
  rc.bins = 3;
  rc.multiplier = 10;
  rc.learn_bn = learn;
  rc.label = "y";
  return cli::prepare(clf::load_classifier(data("toy_classifier.json")), read_csv(data("toy.csv")), rc);
}

void metric_algebra(Checks& c) {
  std::size_t verdicts = 0;
  for (const auto& p : {toy(false), toy(true), mediated(false)}) {
    const auto r = metrics::max_min_ppv(p.qclf, p.dist);
    const double sp = metrics::statistical_parity(r.max, r.min);
    const double di = metrics::disparate_impact(r.max, r.min);
    c.expect(sp == r.max.ppv - r.min.ppv && sp >= 0.0, "SP != max - min");
    c.expect(di >= 0.0 && di <= 1.0, "DI out of range " + fmt(di));
    for (double eps : {0.0, 0.25, 0.5, 1.0}) {
      c.expect(metrics::verify_epsilon(metrics::Metric::DI, di, eps) == (di >= 1.0 - eps), "DI verdict");
      c.expect(metrics::verify_epsilon(metrics::Metric::SP, sp, eps) == (sp <= eps), "SP verdict");
      verdicts += 2;
    }
    const double pcf = metrics::path_specific_causal_fairness(p.qclf, p.data, {}, p.dist_config);
    c.expect(pcf == sp, "PCF with no mediators " + fmt(pcf) + " != SP " + fmt(sp));
  }
  const auto single = mediated(true);
  const auto eo = metrics::equalized_odds(single.qclf, single.data, *single.labels, single.dist_config);
  const auto r = metrics::max_min_ppv(single.qclf, single.dist);
  c.expect(eo.value.has_value() && *eo.value == metrics::statistical_parity(r.max, r.min),
           "EO on a single-label dataset != SP");
  c.note = std::to_string(verdicts) + " verdicts checked; EO(single label) = SP; PCF(no mediators) = SP";
}

// 8 -------------------------------------------------------------------------

void fif_properties(Checks& c) {
  const testing::Crafted cr;
  double worst = 0.0;
  std::size_t checked = 0;
  for (int s = 0; s < 2; ++s) {
    const metrics::Group g{{"s", std::to_string(s)}};
    const auto empty = fif::fif(cr.qclf, cr.dist, g, {});
    c.expect(empty.influence == 0.0, "FIF(empty) != 0");
    c.expect(fif::fif(cr.qclf, cr.dist, g, {"d"}).influence == 0.0, "unused feature has influence");
    struct Case {
      std::vector<std::string> subset;
      bool drop_a, drop_b;
    };
    for (const auto& k : {Case{{"a"}, true, false}, Case{{"b"}, false, true}, Case{{"a", "b"}, true, true}}) {
      const auto res = fif::fif(cr.qclf, cr.dist, g, k.subset);
      const double base = synth::joint_enumeration_oracle(cr.qclf, cr.dist, g);
      const double ablated = synth::joint_enumeration_oracle(cr.qclf, fif::ablate_distribution(cr.qclf, cr.dist, k.subset), g);
      const double hand = testing::Crafted::expected_ppv(s, k.drop_a, k.drop_b);
      worst = std::max({worst, std::abs(res.base_ppv - base), std::abs(res.ablated_ppv - ablated),
                        std::abs(res.ablated_ppv - hand),
                        std::abs(res.influence - (testing::Crafted::expected_ppv(s, false, false) - hand))});
      ++checked;
    }
  }
  c.expect(worst <= 1e-9, "max deviation from oracle " + fmt(worst));

  const auto p = toy(true);
  for (const char* s : {"0", "1"}) {
    const metrics::Group g{{"sex", s}};
    const auto a = fif::fif_all(p.qclf, p.dist, g);
    const auto b = fif::fif_all(p.qclf, p.dist, g);
    for (std::size_t i = 0; i < a.results.size(); ++i) {
      c.expect(a.results[i].influence == b.results[i].influence, "repeat run differs");
    }
    c.expect(fif::fif(p.qclf, p.dist, g, {}).influence == 0.0, "FIF(empty) != 0 on learned network");
  }
  c.note = std::to_string(checked) + " crafted subsets within " + fmt(worst) + " of the oracles; repeats identical";
}

// 9 -------------------------------------------------------------------------

void preprocessing_fidelity(Checks& c) {
  synth::SynthSpec spec;
  spec.n = 3;
  spec.mu = {0.6, 0.7};
  spec.mu0 = {0.4, 0.3};
  spec.samples = 10000;
  spec.seed = 9;
  const auto table = synth::generate(spec);

  clf::LinearClassifier svm;
  svm.features = {{"A", clf::Role::Sensitive, clf::Kind::Boolean},
                  {"X1", clf::Role::Nonsensitive, clf::Kind::Continuous},
                  {"X2", clf::Role::Nonsensitive, clf::Kind::Continuous}};
  svm.weights = {-0.34, 9.37, 9.75};
  svm.category_weights = {{}, {}, {}};
  svm.bias = 9.4;

  cli::RunConfig rc;
  const auto p = cli::prepare(svm, table, rc);
  c.expect(p.provenance.fidelity >= 0.95, "agreement " + fmt(p.provenance.fidelity));
  c.expect(p.provenance.bins <= 10 && p.provenance.multiplier <= 100, "tuned outside the grid");

  bool monotone = true;
  std::string mses;
  for (const char* f : {"X1", "X2"}) {
    const auto values = table.numeric_column(f);
    double prev = INFINITY;
    for (std::size_t k : {2, 4, 8, 16}) {
      const auto d = clf::discretize(svm, table, k);
      for (const auto& b : d.classifier.bins) {
        if (b.feature != f) continue;
        const double mse = clf::reconstruction_mse(b, values);
        monotone = monotone && mse <= prev;
        prev = mse;
        if (std::string(f) == "X1") mses += (mses.empty() ? "" : "/") + fmt(mse);
      }
    }
  }
  c.expect(monotone, "reconstruction MSE increases with k");
  c.note = "k=" + std::to_string(p.provenance.bins) + " l=" + std::to_string(p.provenance.multiplier) +
           " agreement " + fmt(p.provenance.fidelity) + "; X1 MSE " + mses;
}

// 10 ------------------------------------------------------------------------

void replay(Checks& c) {
  cli::RunConfig rc;
  rc.classifier_path = data("toy_classifier.json");
  rc.data_path = data("toy.csv");
  rc.label = "y";
  rc.learn_bn = true;
  rc.mediators = {"priors"};
  rc.seed = 3;
  auto verify = [&] {
    std::ostringstream out, err;
    const int code = cli::cmd_verify(rc, out, err);
    return std::to_string(code) + "\n" + out.str();
  };
  const auto v1 = verify();
  const auto v2 = verify();
  c.expect(v1.rfind("0\n", 0) == 0, "verify exit " + v1.substr(0, 1));
  c.expect(v1 == v2, "verify output differs");

  cli::BenchSpec spec;
  spec.n_values = {2, 3};
  spec.trials = 2;
  spec.samples = 2000;
  spec.seed = 17;
  cli::RunConfig brc;
  auto bench = [&] {
    std::ostringstream out, err;
    const int code = cli::cmd_bench(spec, brc, out, err);
    return std::to_string(code) + "\n" + out.str();
  };
  const auto b1 = bench();
  const auto b2 = bench();
  c.expect(b1.rfind("0\n", 0) == 0, "bench exit " + b1.substr(0, 1));
  c.expect(b1 == b2, "bench output differs");
  c.note = "verify " + std::to_string(v1.size()) + " bytes, bench " + std::to_string(b1.size()) + " bytes, identical";
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "independent worked instance", independent_golden},
      {2, "correlated worked instance", correlated_golden},
      {3, "oracle equivalence", oracle_equivalence},
      {4, "order invariance", order_invariance},
      {5, "memo bounds and scalability", memo_bounds},
      {6, "analytic DI accuracy", analytic_accuracy},
      {7, "metric algebra", metric_algebra},
      {8, "FIF properties", fif_properties},
      {9, "preprocessing fidelity", preprocessing_fidelity},
      {10, "end-to-end replay", replay},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Checks checks;
    try {
      cr.run(checks);
    } catch (const std::exception& e) {
      checks.failures.push_back(std::string("exception: ") + e.what());
    }
    const bool ok = checks.failures.empty();
    failed += ok ? 0 : 1;
    std::string detail = checks.note;
    if (!ok) {
      detail.clear();
      for (const auto& f : checks.failures) detail += (detail.empty() ? "" : "; ") + f;
    }
    std::printf("%s %2d %s: %s\n", ok ? "PASS" : "FAIL", cr.id, cr.title.c_str(), detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
