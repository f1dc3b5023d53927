#pragma once

#include <cstdint>
#include <vector>

#include "sleepx3/core.hpp"

namespace sleepx3 {

// A point of the capped simplex P_k: sums to 1, every entry <= 1/k.
// `pinned` marks the components the projection fixed at exactly 1/k.
struct CappedDistribution {
  std::vector<double> p_hat;
  int k = 0;
  std::vector<std::uint8_t> pinned;
};

// Capping projection onto P_k.
//
// Entries are visited in decreasing order (stable, lower index first on
// ties). The smallest prefix of size i is pinned to exactly 1/k such that
// rescaling the *original* remaining entries proportionally to total
// (k-i)/k leaves them all <= 1/k. An input already inside P_k (max <= 1/k,
// including the exact boundary) is returned unchanged, which makes the
// projection bit-exactly idempotent.
//
// Errors: "InvalidK" unless 1 <= k <= N; "InfeasibleCapping" when p has
// fewer than k nonzero entries.
CappedDistribution cap_project(const std::vector<double>& p, int k);

// q^S(i) = k * p_hat(i): normalize the weights over s, project onto P_k if
// the max exceeds 1/k, scale by k. Requires |s| >= k ("InsufficientArms").
ScaledProbabilityVector scaled_probabilities(const WeightVector& w,
                                             const AvailabilitySet& s, int k);

// The actual per-round selection law, shared by the policy and the joint
// probability estimators so both describe the same process:
//   - empty s: nothing is selected (all-zero marginals);
//   - |s| < k: every arm of s is selected with probability 1;
//   - otherwise: scaled_probabilities(w, s, k).
ScaledProbabilityVector selection_marginals(const WeightVector& w,
                                            const AvailabilitySet& s, int k);

}  // namespace sleepx3
