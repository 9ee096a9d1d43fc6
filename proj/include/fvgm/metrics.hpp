#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fvgm/classifier.hpp"
#include "fvgm/distribution.hpp"
#include "fvgm/s3p.hpp"

namespace fvgm::metrics {

/// One compound sensitive group: (attribute, category) pairs sorted by
/// attribute. Boolean attributes use categories "0" and "1".
using Group = std::vector<std::pair<std::string, std::string>>;

std::string to_string(const Group& group);
/// Parses "attr=value,attr2=value2".
Group parse_group(const std::string& text);

struct GroupResult {
  Group group;
  double ppv = 0.0;
};

enum class GroupMode {
  /// Quantifier mode when every sensitive attribute is Boolean, enumeration otherwise.
  Auto,
  Quantifier,
  Enumerate,
};

struct PpvOptions {
  GroupMode mode = GroupMode::Auto;
  s3p::SolveOptions solve;
};

struct PpvResult {
  GroupResult max;
  GroupResult min;
  s3p::SolverStats stats;
  bool enumerated = false;
};

/// All valid compound groups in lexicographic order.
std::vector<Group> enumerate_groups(const clf::QuantizedClassifier& qclf);

/// Indicator values that hard-wire a group.
std::map<std::string, int> group_assignment(const clf::QuantizedClassifier& qclf, const Group& group);

/// Pr[Y_hat = 1 | A = group] with the sensitive indicators hard-wired.
double group_ppv(const clf::QuantizedClassifier& qclf, const FeatureDistribution& dist, const Group& group,
                 const s3p::SolveOptions& options = {}, s3p::SolverStats* stats = nullptr);

/// Pr[Y_hat = 1] with sensitive features drawn from their own law.
double overall_ppv(const clf::QuantizedClassifier& qclf, const FeatureDistribution& dist,
                   const s3p::SolveOptions& options = {});

/// Most and least favored groups; ties resolve to the lexicographically smallest group.
PpvResult max_min_ppv(const clf::QuantizedClassifier& qclf, const FeatureDistribution& dist,
                      const PpvOptions& options = {});

/// min/max ratio; 1 when the maximum is 0.
double disparate_impact(const GroupResult& max, const GroupResult& min);
double statistical_parity(const GroupResult& max, const GroupResult& min);

struct EqualizedOddsResult {
  std::optional<double> value;
  std::map<int, double> gap_by_label;
  std::vector<std::string> warnings;
};

/// Max over label slices of the max-min PPV gap, refitting the distribution per slice.
EqualizedOddsResult equalized_odds(const clf::QuantizedClassifier& qclf, const BoolDataset& data,
                                   const std::vector<std::uint8_t>& labels, const DistributionConfig& config,
                                   const PpvOptions& options = {});

/// PPV gap when the mediators follow their law conditioned on the most favored group.
double path_specific_causal_fairness(const clf::QuantizedClassifier& qclf, const BoolDataset& data,
                                     const std::vector<std::string>& mediators, const DistributionConfig& config,
                                     const PpvOptions& options = {});

enum class Metric { DI, SP, EO, PCF };
std::string to_string(Metric m);
Metric parse_metric(const std::string& name);

/// DI passes when di >= 1 - eps; the other metrics pass when value <= eps.
bool verify_epsilon(Metric metric, double value, double epsilon);

struct Provenance {
  double fidelity = 1.0;
  std::size_t bins = 0;
  std::int64_t multiplier = 1;
  std::string network;
  std::string dataset_hash;
  std::vector<std::string> warnings;
};

struct FairnessReport {
  GroupResult max_group;
  GroupResult min_group;
  double di = 1.0;
  double sp = 0.0;
  std::optional<double> eo;
  std::optional<double> pcf;
  std::map<std::string, double> epsilon;
  std::map<std::string, bool> verdicts;
  s3p::SolverStats stats;
  bool enumerated = false;
  Provenance provenance;
  std::optional<double> elapsed_ms;

  std::optional<double> value(Metric m) const;
  /// Fills verdicts for every requested epsilon; absent metrics fail.
  void apply_epsilons(const std::map<std::string, double>& eps);
  bool all_pass() const;
};

/// Verdict for one metric of a report; a metric the report lacks fails.
bool verify_epsilon(const FairnessReport& report, Metric metric, double epsilon);

}  // namespace fvgm::metrics
