#include <cmath>
#include <random>

#include "doctest.h"
#include "fvgm/classifier.hpp"
#include "fvgm/error.hpp"

using namespace fvgm;
using namespace fvgm::clf;

namespace {

Table numbers(const std::string& name, const std::vector<double>& xs) {
  Table t;
  t.header = {name};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", xs[i]);
    t.rows.push_back({buf});
    t.lines.push_back(i + 2);
  }
  return t;
}

LinearClassifier one_continuous(double w, double bias) {
  LinearClassifier c;
  c.features = {{"x", Role::Nonsensitive, Kind::Continuous}};
  c.weights = {w};
  c.category_weights = {{}};
  c.bias = bias;
  return c;
}

}  // namespace

TEST_CASE("equal-frequency cuts and bin means") {
  const auto d = discretize(one_continuous(2.0, 0.0), numbers("x", {8, 7, 6, 5, 4, 3, 2, 1}), 4);
  REQUIRE(d.classifier.bins.size() == 1);
  const auto& b = d.classifier.bins[0];
  CHECK(b.edges == std::vector<double>{2, 4, 6});
  CHECK(b.means == std::vector<double>{1.5, 3.5, 5.5, 7.5});
  CHECK(b.bin_of(2.0) == 0);
  CHECK(b.bin_of(2.5) == 1);
  CHECK(b.bin_of(100.0) == 3);
  CHECK(b.bin_of(-100.0) == 0);
  REQUIRE(d.classifier.coefficients.size() == 4);
  CHECK(d.classifier.coefficients[1] == doctest::Approx(7.0));
  CHECK(d.classifier.features[0].name == "x#0");
  CHECK(d.data.column("x#3")[0] == 1);
}

TEST_CASE("tied quantiles and constant columns shrink the bin count with a warning") {
  const auto tied = discretize(one_continuous(1.0, 0.0), numbers("x", {1, 1, 1, 1, 2}), 4);
  CHECK(tied.classifier.bins[0].num_bins() == 2);
  CHECK_FALSE(tied.classifier.warnings.empty());
  const auto flat = discretize(one_continuous(1.0, 0.0), numbers("x", {3, 3, 3}), 5);
  CHECK(flat.classifier.bins[0].num_bins() == 1);
  CHECK(flat.classifier.bins[0].means[0] == 3.0);
}

TEST_CASE("quantization rounds half away from zero") {
  DiscretizedClassifier d;
  d.features = {{"a", "a", Role::Nonsensitive, IndicatorKind::Passthrough, ""},
                {"b", "b", Role::Nonsensitive, IndicatorKind::Passthrough, ""},
                {"c", "c", Role::Nonsensitive, IndicatorKind::Passthrough, ""}};
  d.coefficients = {0.5, -0.5, 1.24};
  d.threshold = 2.5;
  const auto q = quantize(d, 1);
  CHECK(q.weights == std::vector<std::int64_t>{1, -1, 1});
  CHECK(q.threshold == 3);
  const auto q10 = quantize(d, 10);
  CHECK(q10.weights == std::vector<std::int64_t>{5, -5, 12});
  CHECK(q10.threshold == 25);
  CHECK_THROWS_AS(quantize(d, 0), InputError);
}

TEST_CASE("categorical features become one indicator per category") {
  LinearClassifier c;
  c.features = {{"r", Role::Nonsensitive, Kind::Categorical}};
  c.weights = {0.0};
  c.category_weights = {{{"a", 1.0}, {"b", -1.0}}};
  c.bias = 0.0;
  Table t;
  t.header = {"r"};
  t.rows = {{"a"}, {"c"}, {"b"}};
  t.lines = {2, 3, 4};
  const auto d = discretize(c, t, 3);
  REQUIRE(d.classifier.features.size() == 3);
  CHECK(d.classifier.features[2].name == "r=c");
  CHECK(d.classifier.coefficients[2] == 0.0);
  const auto q = quantize(d.classifier, 1);
  REQUIRE(q.groups().size() == 1);
  CHECK(q.groups()[0].members.size() == 3);
  CHECK(d.data.column("r=c")[1] == 1);
}

TEST_CASE("predictions of Boolean classifiers survive quantization exactly") {
  LinearClassifier c;
  c.features = {{"a", Role::Sensitive, Kind::Boolean}, {"b", Role::Nonsensitive, Kind::Boolean}};
  c.weights = {2.0, -1.0};
  c.category_weights = {{}, {}};
  c.bias = 1.0;
  Table t;
  t.header = {"a", "b"};
  t.rows = {{"0", "0"}, {"0", "1"}, {"1", "0"}, {"1", "1"}};
  t.lines = {2, 3, 4, 5};
  const auto d = discretize(c, t, 2);
  const auto q = quantize(d.classifier, 1);
  CHECK(agreement(q, d.data, predict_all(c, t)) == 1.0);
  const auto tuned = tune(c, t, 3);
  CHECK(tuned.bins == 2);
  CHECK(tuned.multiplier == 1);
  CHECK(tuned.fidelity == 1.0);
}

TEST_CASE("tuning is deterministic under the seed") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> xs;
  for (int i = 0; i < 500; ++i) xs.push_back(g(rng));
  const auto t = numbers("x", xs);
  const auto c = one_continuous(1.3, 0.2);
  const auto a = tune(c, t, 42);
  const auto b = tune(c, t, 42);
  CHECK(a.bins == b.bins);
  CHECK(a.multiplier == b.multiplier);
  CHECK(a.fidelity == b.fidelity);
  CHECK(a.fidelity > 0.9);
}

TEST_CASE("refining bins never increases reconstruction error") {
  std::mt19937_64 rng(15);
  std::normal_distribution<double> g(0.5, 0.2);
  std::vector<double> xs;
  for (int i = 0; i < 2000; ++i) xs.push_back(g(rng));
  const auto t = numbers("x", xs);
  double prev = 1e9;
  for (std::size_t k : {2, 4, 8, 16}) {
    const auto d = discretize(one_continuous(1.0, 0.0), t, k);
    const double mse = reconstruction_mse(d.classifier.bins[0], xs);
    CHECK(mse <= prev);
    prev = mse;
  }
}

TEST_CASE("classifier JSON round trip and validation") {
  const auto j = nlohmann::json::parse(R"({
    "features": [{"name": "s", "role": "sensitive", "kind": "boolean"},
                 {"name": "x"},
                 {"name": "c", "kind": "categorical"}],
    "weights": [1, 0.5, {"u": 1, "v": -2}],
    "bias": 0.25})");
  const auto c = classifier_from_json(j);
  CHECK(c.features[0].role == Role::Sensitive);
  CHECK(c.features[1].kind == Kind::Continuous);
  CHECK(c.category_weights[2].at("v") == -2.0);
  CHECK(to_json(classifier_from_json(to_json(c))).dump() == to_json(c).dump());
  CHECK_THROWS_AS(classifier_from_json(nlohmann::json::parse(R"({"features":[{"name":"x"}],"weights":[],"bias":0})")),
                  InputError);
  CHECK_THROWS_AS(
      classifier_from_json(nlohmann::json::parse(R"({"features":[{"name":"x","role":"other"}],"weights":[1],"bias":0})")),
      InputError);
}

TEST_CASE("non-numeric cells report their line") {
  Table t;
  t.header = {"x"};
  t.rows = {{"1"}, {"oops"}};
  t.lines = {2, 3};
  try {
    discretize(one_continuous(1.0, 0.0), t, 2);
    FAIL("expected an input error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}
