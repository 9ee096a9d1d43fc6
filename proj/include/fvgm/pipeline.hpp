#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fvgm/classifier.hpp"
#include "fvgm/dataset.hpp"
#include "fvgm/distribution.hpp"
#include "fvgm/metrics.hpp"
#include "fvgm/report.hpp"

namespace fvgm::cli {

enum class OutputFormat { Json, Csv };

struct RunConfig {
  std::string classifier_path;
  std::string data_path;
  std::string label;
  /// Overrides the roles in the classifier file when non-empty.
  std::vector<std::string> sensitive;
  /// Unset means tune over the grid.
  std::optional<std::size_t> bins;
  std::optional<std::int64_t> multiplier;
  std::string bn_path;
  bool learn_bn = false;
  double smoothing = 0.0;
  std::size_t max_parents = 3;
  std::size_t restarts = 0;
  std::map<std::string, double> epsilons;
  std::vector<std::string> mediators;
  std::uint64_t seed = 0;
  std::string out;
  OutputFormat format = OutputFormat::Json;
  metrics::GroupMode group_mode = metrics::GroupMode::Auto;
  /// fif only: a compound group or "all".
  std::string group;
  std::vector<std::string> subset;
  bool timing = false;
};

/// A classifier turned into a Boolean verification problem.
struct Prepared {
  clf::QuantizedClassifier qclf;
  BoolDataset data;
  std::optional<std::vector<std::uint8_t>> labels;
  FeatureDistribution dist;
  DistributionConfig dist_config;
  metrics::Provenance provenance;
};

/// Applies --sensitive to the classifier's roles.
clf::LinearClassifier apply_roles(clf::LinearClassifier clf, const std::vector<std::string>& sensitive);

/// Tune or take (k, l), discretize, quantize and fit the feature distribution.
Prepared prepare(const clf::LinearClassifier& clf, const Table& data, const RunConfig& config);

/// Data-free preparation: every feature must be Boolean and the marginals come
/// from the root nodes of the network file.
Prepared prepare_without_data(const clf::LinearClassifier& clf, const bn::BayesNet& net, const RunConfig& config);

/// DI, SP and, when possible, EO and PCF for a prepared problem.
metrics::FairnessReport audit(const Prepared& p, const RunConfig& config);

struct BenchSpec {
  std::vector<std::size_t> n_values{2, 3, 5};
  std::size_t trials = 20;
  std::size_t samples = 10000;
  double sigma = 0.1;
  std::uint64_t seed = 0;
  std::optional<std::size_t> bins;
  std::optional<std::int64_t> multiplier;
  bool timing = false;

  static BenchSpec from_json(const nlohmann::json& j);
};

/// Trial i (counted across all n) uses seed + i.
report::BenchReport run_bench(const BenchSpec& spec);

/// Each command returns the process exit code: 0 when every requested epsilon
/// verdict passes, 1 when one fails, 2 on bad input.
int cmd_verify(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_fif(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchSpec& spec, const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_learn_bn(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_diff(const std::string& a, const std::string& b, const RunConfig& config, std::ostream& out,
             std::ostream& err);

}  // namespace fvgm::cli
