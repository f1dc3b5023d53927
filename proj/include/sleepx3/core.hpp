#pragma once

#include <cstdint>
#include <vector>

#include "sleepx3/rng.hpp"

namespace sleepx3 {

// Arms are indexed 0..N-1.
using ArmIndex = int;

// The set of arms that can be played this round. Members are sorted
// ascending with no duplicates.
class AvailabilitySet {
 public:
  AvailabilitySet() = default;

  // Sorts and deduplicates; every index must lie in [0, n).
  static AvailabilitySet from_arms(std::vector<ArmIndex> arms, int n);

  // Trusted fast path: `arms` must already be sorted, unique, in range.
  static AvailabilitySet from_sorted_unchecked(std::vector<ArmIndex> arms);

  const std::vector<ArmIndex>& members() const noexcept { return members_; }
  int size() const noexcept { return static_cast<int>(members_.size()); }
  bool empty() const noexcept { return members_.empty(); }
  bool contains(ArmIndex i) const;

  bool operator==(const AvailabilitySet& other) const = default;

 private:
  std::vector<ArmIndex> members_;
};

// Semi-bandit feedback: a loss in [0,1] for each arm that was played.
class LossVector {
 public:
  LossVector() = default;

  // Validates every value in [0,1]; throws "LossOutOfRange" otherwise.
  static LossVector from_pairs(std::vector<std::pair<ArmIndex, double>> entries);

  const std::vector<std::pair<ArmIndex, double>>& entries() const noexcept {
    return entries_;
  }

 private:
  std::vector<std::pair<ArmIndex, double>> entries_;  // sorted by arm
};

// Multiplicative weights kept in natural-log scale. Products of
// exp(-eta * lhat) over long horizons underflow in linear scale, so the
// update is additive on logs and normalization subtracts the max.
class WeightVector {
 public:
  explicit WeightVector(int n);  // uniform start: all log-weights 0
  static WeightVector from_log_weights(std::vector<double> log_weights);

  int size() const noexcept { return static_cast<int>(log_weights_.size()); }
  double log_weight(ArmIndex i) const { return log_weights_[i]; }
  const std::vector<double>& log_weights() const noexcept {
    return log_weights_;
  }

  // log_w(i) -= amount; amount must be finite and >= 0.
  void decay(ArmIndex i, double amount);

 private:
  std::vector<double> log_weights_;
};

// The k-scaled capped distribution q^S: entries in [0,1], sum k, support
// inside the availability set it was built from. q(i) is the marginal
// probability that arm i is among the k selected.
struct ScaledProbabilityVector {
  std::vector<double> q;
  int k = 0;
};

// p(i) = w(i) / sum_{j in S} w(j) for i in S, exactly 0 outside S.
// Computed as exp(log w - max log w over S) so extreme log-weight spreads
// normalize without overflow; members are floored at DBL_MIN so every
// available arm keeps strictly positive mass.
std::vector<double> normalize_over_set(const WeightVector& w,
                                       const AvailabilitySet& s);

// Each arm i joins the set independently with probability a[i].
AvailabilitySet sample_bernoulli_set(const std::vector<double>& a,
                                     SeededRng& rng);

}  // namespace sleepx3
