#include "sleepx3/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sleepx3/errors.hpp"

namespace sleepx3 {

AvailabilitySet AvailabilitySet::from_arms(std::vector<ArmIndex> arms, int n) {
  std::sort(arms.begin(), arms.end());
  arms.erase(std::unique(arms.begin(), arms.end()), arms.end());
  for (ArmIndex i : arms) {
    if (i < 0 || i >= n)
      throw Error("InvalidArmIndex",
                  "arm " + std::to_string(i) + " outside [0, " +
                      std::to_string(n) + ")");
  }
  AvailabilitySet s;
  s.members_ = std::move(arms);
  return s;
}

AvailabilitySet AvailabilitySet::from_sorted_unchecked(
    std::vector<ArmIndex> arms) {
  AvailabilitySet s;
  s.members_ = std::move(arms);
  return s;
}

bool AvailabilitySet::contains(ArmIndex i) const {
  return std::binary_search(members_.begin(), members_.end(), i);
}

LossVector LossVector::from_pairs(
    std::vector<std::pair<ArmIndex, double>> entries) {
  std::sort(entries.begin(), entries.end());
  for (const auto& [arm, value] : entries) {
    if (!(value >= 0.0 && value <= 1.0))
      throw Error("LossOutOfRange", "loss " + std::to_string(value) +
                                        " for arm " + std::to_string(arm));
  }
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].first == entries[i - 1].first)
      throw Error("FeedbackMismatch",
                  "duplicate loss entry for arm " +
                      std::to_string(entries[i].first));
  }
  LossVector v;
  v.entries_ = std::move(entries);
  return v;
}

WeightVector::WeightVector(int n) : log_weights_(n, 0.0) {
  if (n <= 0) throw Error("InvalidArgument", "need at least one arm");
}

WeightVector WeightVector::from_log_weights(std::vector<double> log_weights) {
  if (log_weights.empty())
    throw Error("InvalidArgument", "need at least one arm");
  for (double lw : log_weights) {
    if (!std::isfinite(lw))
      throw Error("InvalidArgument", "log-weights must be finite");
  }
  WeightVector w(static_cast<int>(log_weights.size()));
  w.log_weights_ = std::move(log_weights);
  return w;
}

void WeightVector::decay(ArmIndex i, double amount) {
  if (!(std::isfinite(amount) && amount >= 0.0))
    throw Error("InvalidArgument", "weight decay must be finite and >= 0");
  log_weights_[i] -= amount;
}

std::vector<double> normalize_over_set(const WeightVector& w,
                                       const AvailabilitySet& s) {
  if (s.empty())
    throw Error("EmptyAvailabilitySet", "cannot normalize over an empty set");
  double max_lw = -std::numeric_limits<double>::infinity();
  for (ArmIndex i : s.members()) max_lw = std::max(max_lw, w.log_weight(i));

  std::vector<double> p(w.size(), 0.0);
  double sum = 0.0;
  for (ArmIndex i : s.members()) {
    // Floor keeps every available arm strictly positive even when the
    // log-weight spread exceeds exp()'s underflow range.
    const double e = std::max(std::exp(w.log_weight(i) - max_lw),
                              std::numeric_limits<double>::min());
    p[i] = e;
    sum += e;
  }
  for (ArmIndex i : s.members()) p[i] /= sum;
  return p;
}

AvailabilitySet sample_bernoulli_set(const std::vector<double>& a,
                                     SeededRng& rng) {
  std::vector<ArmIndex> members;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (rng.bernoulli(a[i])) members.push_back(static_cast<ArmIndex>(i));
  }
  return AvailabilitySet::from_sorted_unchecked(std::move(members));
}

}  // namespace sleepx3
