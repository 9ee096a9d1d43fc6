#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fvgm/fif.hpp"
#include "fvgm/metrics.hpp"
#include "json.hpp"

namespace fvgm::report {

using Json = nlohmann::ordered_json;

Json to_json(const metrics::FairnessReport& r);
std::string to_csv(const metrics::FairnessReport& r);

Json to_json(const fif::FifReport& r, const std::optional<fif::FifResult>& subset_query);
std::string to_csv(const fif::FifReport& r, const std::optional<fif::FifResult>& subset_query);

struct BenchTrial {
  std::size_t n = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double analytic_di = 1.0;
  double verifier_di = 1.0;
  double independent_di = 1.0;
  std::size_t bins = 0;
  std::int64_t multiplier = 1;
  double fidelity = 0.0;
  std::uint64_t memo_entries = 0;
  std::optional<double> elapsed_ms;

  double error() const;
  double independent_error() const;
};

struct BenchReport {
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  double sigma = 0.1;
  std::vector<BenchTrial> trials;

  double mean_error() const;
  double mean_independent_error() const;
};

Json to_json(const BenchReport& r);
std::string to_csv(const BenchReport& r);

/// Metric-by-metric comparison of two verify reports: (a, b, b - a).
Json diff(const nlohmann::json& a, const nlohmann::json& b);
std::string diff_csv(const Json& d);

/// Serialized form with a trailing newline.
std::string dump(const Json& j);

}  // namespace fvgm::report
