#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fvgm/classifier.hpp"
#include "fvgm/dataset.hpp"
#include "fvgm/distribution.hpp"
#include "fvgm/metrics.hpp"

namespace fvgm::synth {

/// Gaussian benchmark: a Boolean sensitive A ~ Bern(0.5) plus n-1 real
/// features with X_i | A=1 ~ N(mu_i, sigma^2) and X_i | A=0 ~ N(mu0_i, sigma^2).
struct SynthSpec {
  std::size_t n = 2;
  std::vector<double> mu;
  std::vector<double> mu0;
  double sigma = 0.1;
  std::size_t samples = 10000;
  std::uint64_t seed = 0;

  void validate() const;
  /// Label threshold 0.5 * sum(mu + mu0).
  double label_threshold() const;
};

/// Means drawn uniformly from [0,1] with the given seed.
SynthSpec random_spec(std::size_t n, std::size_t samples, std::uint64_t seed, double sigma = 0.1);

/// Columns A, X1..X{n-1}, Y. Values use the shortest round-trip decimal form.
Table generate(const SynthSpec& spec);

/// Unit weights on X, zero weight on A, bias at the label threshold.
clf::LinearClassifier unit_classifier(const SynthSpec& spec);

struct AnalyticPpv {
  double ppv_a1 = 0.0;
  double ppv_a0 = 0.0;
  double di = 1.0;
};

/// Group PPVs from the Gaussian law of the score w.X + w_A A against bias tau.
AnalyticPpv analytic_ppv(const std::vector<double>& weights, double weight_a, double bias, const SynthSpec& spec);
double analytic_di(const std::vector<double>& weights, double weight_a, double bias, const SynthSpec& spec);

/// Pr[Y_hat = outcome] by enumerating every joint assignment of the classifier
/// features and network nodes, conditioned on `group` when given.
double joint_enumeration_oracle(const clf::QuantizedClassifier& qclf, const FeatureDistribution& dist,
                                const std::optional<metrics::Group>& group = std::nullopt, int outcome = 1);

/// Portable generators so datasets match across standard libraries.
double uniform01(std::uint64_t bits);
double normal_cdf(double x);

}  // namespace fvgm::synth
