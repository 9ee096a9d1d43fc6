#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fvgm/classifier.hpp"
#include "fvgm/distribution.hpp"
#include "fvgm/metrics.hpp"

namespace fvgm::fif {

struct FifResult {
  /// Source feature names, sorted.
  std::vector<std::string> subset;
  /// Compound group label, or "all" when the sensitive features keep their own law.
  std::string group;
  double base_ppv = 0.0;
  double ablated_ppv = 0.0;
  double influence = 0.0;
};

struct FifReport {
  std::string group;
  double base_ppv = 0.0;
  std::vector<FifResult> results;
};

/// Makes every feature of `subset` independent and uniform over its indicator
/// group. Network nodes of the subset are removed; their children average the
/// removed parents out under the parents' joint law before the ablation.
FeatureDistribution ablate_distribution(const clf::QuantizedClassifier& qclf, const FeatureDistribution& dist,
                                        const std::vector<std::string>& subset);

/// PPV change for one group (nullopt means "all") when `subset` is ablated.
FifResult fif(const clf::QuantizedClassifier& qclf, const FeatureDistribution& dist,
              const std::optional<metrics::Group>& group, const std::vector<std::string>& subset,
              const s3p::SolveOptions& options = {});

/// One single-feature result per nonsensitive source feature, in classifier order.
FifReport fif_all(const clf::QuantizedClassifier& qclf, const FeatureDistribution& dist,
                  const std::optional<metrics::Group>& group, const s3p::SolveOptions& options = {});

}  // namespace fvgm::fif
