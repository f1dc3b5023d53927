#pragma once

#include <cstdint>
#include <vector>

#include "sleepx3/core.hpp"
#include "sleepx3/rng.hpp"

namespace sleepx3 {

inline constexpr int kDefaultEnumerationLimit = 16;

// Running per-arm availability counts; the empirical rate is counts/t.
class AvailabilityEstimate {
 public:
  explicit AvailabilityEstimate(int n);

  int arms() const noexcept { return static_cast<int>(counts_.size()); }
  std::int64_t rounds() const noexcept { return rounds_; }
  const std::vector<std::int64_t>& counts() const noexcept { return counts_; }

  void record(const AvailabilitySet& s);

  // Empirical rates a_hat(i) = counts(i)/t. Before any observation
  // (t = 0) the prior is all-ones: the round-1 loss estimate is dominated
  // by lambda_1 = 1 regardless.
  std::vector<double> rates() const;

  void restore(std::vector<std::int64_t> counts, std::int64_t rounds);

 private:
  std::vector<std::int64_t> counts_;
  std::int64_t rounds_ = 0;
};

// q_hat(i) = sum over all subsets S of P_ahat(S) * q^S(i), where q^S is the
// selection law (selection_marginals). Arms with empirical rate exactly 0
// or 1 are fixed out/in, so the enumeration runs over the remaining free
// arms only. Errors: "EnumerationTooLarge" when N exceeds `limit`.
std::vector<double> exact_joint_probability(
    const AvailabilityEstimate& est, const WeightVector& w, int k,
    int limit = kDefaultEnumerationLimit);

// q_tilde(i) = (1/samples) * sum_tau q^{S(tau)}(i) with S(tau) drawn from
// the empirical availability distribution; unbiased for the exact sum.
std::vector<double> monte_carlo_joint_probability(
    const AvailabilityEstimate& est, const WeightVector& w, int k,
    std::int64_t samples, SeededRng& rng);

}  // namespace sleepx3
