#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fvgm/dataset.hpp"
#include "json.hpp"

namespace fvgm::clf {

enum class Role { Sensitive, Nonsensitive };
enum class Kind { Continuous, Boolean, Categorical };

struct FeatureSpec {
  std::string name;
  Role role = Role::Nonsensitive;
  Kind kind = Kind::Continuous;
};

/// 1[sum_j w_j x_j >= bias]. Categorical features carry one weight per category.
struct LinearClassifier {
  std::vector<FeatureSpec> features;
  std::vector<double> weights;
  std::vector<std::map<std::string, double>> category_weights;
  double bias = 0.0;

  void validate() const;
  std::size_t index_of(const std::string& name) const;
};

using FeatureValue = std::variant<double, std::string>;
using FeatureRow = std::map<std::string, FeatureValue>;

int predict(const LinearClassifier& clf, const FeatureRow& row);
/// Predictions for every row of a table whose columns include the features.
std::vector<int> predict_all(const LinearClassifier& clf, const Table& data);

/// Equal-frequency bins of one continuous feature. Bin i covers
/// (edges[i-1], edges[i]]; the first and last bins are unbounded outward.
struct BinSpec {
  std::string feature;
  std::vector<double> edges;
  std::vector<double> means;

  std::size_t num_bins() const { return means.size(); }
  std::size_t bin_of(double x) const;
};

/// Mean squared error of replacing each value with its bin mean.
double reconstruction_mse(const BinSpec& spec, const std::vector<double>& values);

enum class IndicatorKind { Passthrough, Bin, Category };

struct BoolFeature {
  std::string name;
  std::string source;
  Role role = Role::Nonsensitive;
  IndicatorKind kind = IndicatorKind::Passthrough;
  /// Category value or bin index, as text; empty for passthrough features.
  std::string label;
};

/// Members of one source feature's indicator group; exactly one is 1 per row.
struct ExclusiveGroup {
  std::string source;
  Role role = Role::Nonsensitive;
  std::vector<std::string> members;
  std::vector<std::string> labels;
};

/// Boolean-feature classifier with real coefficients, before integer scaling.
struct DiscretizedClassifier {
  std::vector<BoolFeature> features;
  std::vector<double> coefficients;
  double threshold = 0.0;
  std::vector<BinSpec> bins;
  std::map<std::string, std::vector<std::string>> categories;
  std::size_t bins_per_feature = 0;
  std::vector<std::string> warnings;
};

struct QuantizedClassifier {
  std::vector<BoolFeature> features;
  std::vector<std::int64_t> weights;
  std::int64_t threshold = 0;
  std::int64_t multiplier = 1;
  std::size_t bins_per_feature = 0;
  std::vector<BinSpec> bins;
  std::map<std::string, std::vector<std::string>> categories;

  std::size_t index_of(const std::string& name) const;
  /// Indicator groups (bins and categories) in feature order.
  std::vector<ExclusiveGroup> groups() const;
  /// Source feature names in first-appearance order.
  std::vector<std::string> sources() const;
  std::vector<std::string> sensitive_sources() const;
  std::vector<std::string> indicators_of(const std::string& source) const;
};

/// Category values of every categorical feature: the classifier's weight keys
/// plus every value seen in the data, sorted.
std::map<std::string, std::vector<std::string>> collect_categories(const LinearClassifier& clf, const Table& data);

struct Discretization {
  DiscretizedClassifier classifier;
  BoolDataset data;
};

/// Equal-frequency binning of continuous features into at most k bins with
/// within-bin means as representative values.
Discretization discretize(const LinearClassifier& clf, const Table& data, std::size_t k,
                          const std::map<std::string, std::vector<std::string>>* categories = nullptr);

/// Re-encodes rows with an existing discretization scheme.
BoolDataset encode(const DiscretizedClassifier& scheme, const LinearClassifier& clf, const Table& data);

/// Scales coefficients and threshold by l and rounds half away from zero.
QuantizedClassifier quantize(const DiscretizedClassifier& clf, std::int64_t multiplier);

int predict(const QuantizedClassifier& clf, const BoolDataset& data, std::size_t row);
int predict(const QuantizedClassifier& clf, const std::map<std::string, int>& row);

/// Fraction of rows on which the quantized classifier matches the reference predictions.
double agreement(const QuantizedClassifier& clf, const BoolDataset& data, const std::vector<int>& reference);

struct TuneGrid {
  std::size_t min_bins = 2;
  std::size_t max_bins = 10;
  std::int64_t min_multiplier = 1;
  std::int64_t max_multiplier = 100;
};

struct TuneResult {
  std::size_t bins = 0;
  std::int64_t multiplier = 1;
  double fidelity = 0.0;
};

/// Deterministic 80/20 split of row indices: (train, validation).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_rows(std::size_t rows, std::uint64_t seed);

Table select_rows(const Table& data, const std::vector<std::size_t>& rows);

/// Grid search maximizing validation agreement; ties prefer smaller k, then smaller l.
TuneResult tune(const LinearClassifier& clf, const Table& data, std::uint64_t seed, const TuneGrid& grid = {});

LinearClassifier classifier_from_json(const nlohmann::json& j);
LinearClassifier load_classifier(const std::string& path);
nlohmann::ordered_json to_json(const LinearClassifier& clf);
nlohmann::ordered_json to_json(const QuantizedClassifier& clf);
QuantizedClassifier quantized_from_json(const nlohmann::json& j);

std::string to_string(Role role);
std::string to_string(Kind kind);

}  // namespace fvgm::clf
