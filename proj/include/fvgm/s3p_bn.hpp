#pragma once

#include <cstdint>

#include "fvgm/bayesnet.hpp"
#include "fvgm/s3p.hpp"

namespace fvgm::s3p {

/// An S3P instance whose network-covered variables follow the network's
/// conditionals instead of their own Random probabilities.
struct CorrelatedInstance {
  S3PInstance instance;
  bn::BayesNet net;

  /// Net nodes name instance variables and choice variables in the net have no parents.
  void validate() const;
};

/// choice in net (topological), choice outside net (weight-sorted), chance
/// in net (topological), chance outside net (weight-sorted).
CorrelatedInstance order_for_bn(const CorrelatedInstance& ci);

/// Memo size bound (n - n'' - |V|)(tau + |w_neg| - w'_exists - w'_forall)
/// where the primed sums range over choice variables outside the network.
std::int64_t correlated_memo_bound(const CorrelatedInstance& ci);

/// Enumerates network variables (choice ones by max/min over both branches),
/// memoizing only chance variables outside the network once no network
/// variable remains. `options.reorder` is ignored; call order_for_bn first.
/// choice_assignment holds each choice variable's decision on the optimal
/// branch of the leading choice block.
S3PSolution solve_correlated(const CorrelatedInstance& ci, const SolveOptions& options = {});

}  // namespace fvgm::s3p
