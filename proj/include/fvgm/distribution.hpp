#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fvgm/bayesnet.hpp"
#include "fvgm/classifier.hpp"
#include "fvgm/dataset.hpp"
#include "fvgm/s3p_bn.hpp"

namespace fvgm {

/// Feature law over a quantized classifier's Boolean features: network nodes
/// follow the network, every other variable is independent with its marginal.
/// Members of an indicator group outside the network are jointly categorical
/// with probabilities proportional to their marginals.
struct FeatureDistribution {
  bn::BayesNet net;
  std::map<std::string, double> marginals;
};

enum class NetworkMode { Independent, Learn, Fixed };

struct DistributionConfig {
  NetworkMode mode = NetworkMode::Independent;
  /// Structure to refit under NetworkMode::Fixed.
  std::optional<bn::Dag> structure;
  /// Parameters used verbatim when set (a loaded network file); refits reuse only its structure.
  std::optional<bn::BayesNet> network;
  double smoothing = 0.0;
  std::size_t max_parents = 3;
  std::size_t restarts = 0;
  std::uint64_t seed = 0;
};

/// Marginals for every classifier column plus a network per the configured mode.
/// Learned structures force chain edges inside each nonsensitive indicator
/// group so the exactly-one constraint is representable.
FeatureDistribution fit_distribution(const clf::QuantizedClassifier& qclf, const BoolDataset& data,
                                     const DistributionConfig& config, std::vector<std::string>* warnings = nullptr);

/// A config that refits parameters on the structure `fitted` already uses.
DistributionConfig refit_config(const DistributionConfig& config, const FeatureDistribution& fitted);

/// Chain edges member[i] -> member[j] (i < j) for every nonsensitive group.
std::vector<bn::Edge> group_chain_edges(const clf::QuantizedClassifier& qclf);

/// How sensitive variables enter the instance.
struct SensitiveBinding {
  enum class Kind { Exists, Forall, Fixed, Random };
  Kind kind = Kind::Exists;
  /// Indicator values under Kind::Fixed.
  std::map<std::string, int> fixed;
};

/// Builds the correlated S3P instance for a classifier under a distribution.
/// Independent indicator groups become chain-structured network nodes and
/// isolated network nodes are demoted to plain Random variables.
s3p::CorrelatedInstance build_instance(const clf::QuantizedClassifier& qclf, const FeatureDistribution& dist,
                                       const SensitiveBinding& binding);

/// Solves a built instance: plain S3P when the network is empty, otherwise the
/// correlated solver on the network-aware ordering.
s3p::S3PSolution solve_instance(const s3p::CorrelatedInstance& ci, const s3p::SolveOptions& options);

std::string summarize(const bn::BayesNet& net);

}  // namespace fvgm
