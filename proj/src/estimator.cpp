#include "sleepx3/estimator.hpp"

#include <algorithm>
#include <string>

#include "sleepx3/errors.hpp"
#include "sleepx3/projection.hpp"

namespace sleepx3 {

AvailabilityEstimate::AvailabilityEstimate(int n) : counts_(n, 0) {
  if (n <= 0) throw Error("InvalidArgument", "need at least one arm");
}

void AvailabilityEstimate::record(const AvailabilitySet& s) {
  for (ArmIndex i : s.members()) ++counts_[i];
  ++rounds_;
}

std::vector<double> AvailabilityEstimate::rates() const {
  std::vector<double> r(counts_.size(), 1.0);
  if (rounds_ == 0) return r;
  for (std::size_t i = 0; i < counts_.size(); ++i)
    r[i] = static_cast<double>(counts_[i]) / static_cast<double>(rounds_);
  return r;
}

void AvailabilityEstimate::restore(std::vector<std::int64_t> counts,
                                   std::int64_t rounds) {
  for (std::int64_t c : counts) {
    if (c < 0 || c > rounds)
      throw Error("InvalidArgument", "availability count outside [0, t]");
  }
  counts_ = std::move(counts);
  rounds_ = rounds;
}

std::vector<double> exact_joint_probability(const AvailabilityEstimate& est,
                                            const WeightVector& w, int k,
                                            int limit) {
  const int n = est.arms();
  if (n > limit)
    throw Error("EnumerationTooLarge",
                "N = " + std::to_string(n) + " exceeds enumeration limit " +
                    std::to_string(limit));

  const std::vector<double> rates = est.rates();
  std::vector<ArmIndex> always, free_arms;
  for (ArmIndex i = 0; i < n; ++i) {
    if (rates[i] >= 1.0) {
      always.push_back(i);
    } else if (rates[i] > 0.0) {
      free_arms.push_back(i);
    }
    // rate 0: the arm is never available, no subset with mass contains it.
  }

  std::vector<double> q_hat(n, 0.0);
  const std::uint64_t combos = std::uint64_t{1} << free_arms.size();
  std::vector<ArmIndex> members;
  members.reserve(n);
  for (std::uint64_t mask = 0; mask < combos; ++mask) {
    double prob = 1.0;
    members = always;
    for (std::size_t b = 0; b < free_arms.size(); ++b) {
      if (mask & (std::uint64_t{1} << b)) {
        prob *= rates[free_arms[b]];
        members.push_back(free_arms[b]);
      } else {
        prob *= 1.0 - rates[free_arms[b]];
      }
    }
    if (prob == 0.0 || members.empty()) continue;
    std::sort(members.begin(), members.end());
    const AvailabilitySet s = AvailabilitySet::from_sorted_unchecked(members);
    const ScaledProbabilityVector q_s = selection_marginals(w, s, k);
    for (ArmIndex i : s.members()) q_hat[i] += prob * q_s.q[i];
  }
  return q_hat;
}

std::vector<double> monte_carlo_joint_probability(
    const AvailabilityEstimate& est, const WeightVector& w, int k,
    std::int64_t samples, SeededRng& rng) {
  if (samples < 1) throw Error("InvalidArgument", "samples must be >= 1");
  const int n = est.arms();
  const std::vector<double> rates = est.rates();

  // Degenerate empirical distribution (every rate 0 or 1) is a single
  // atom; the sample mean is the atom's value, exactly.
  if (std::all_of(rates.begin(), rates.end(),
                  [](double r) { return r == 0.0 || r == 1.0; })) {
    std::vector<ArmIndex> members;
    for (int i = 0; i < n; ++i)
      if (rates[i] == 1.0) members.push_back(i);
    if (members.empty()) return std::vector<double>(n, 0.0);
    return selection_marginals(
               w, AvailabilitySet::from_sorted_unchecked(std::move(members)),
               k)
        .q;
  }

  std::vector<double> q_tilde(n, 0.0);
  for (std::int64_t tau = 0; tau < samples; ++tau) {
    const AvailabilitySet s = sample_bernoulli_set(rates, rng);
    if (s.empty()) continue;
    const ScaledProbabilityVector q_s = selection_marginals(w, s, k);
    for (ArmIndex i : s.members()) q_tilde[i] += q_s.q[i];
  }
  for (double& v : q_tilde) v /= static_cast<double>(samples);
  return q_tilde;
}

}  // namespace sleepx3
