#include "sleepx3/projection.hpp"

#include <algorithm>
#include <numeric>

#include "sleepx3/errors.hpp"

namespace sleepx3 {

CappedDistribution cap_project(const std::vector<double>& p, int k) {
  const int n = static_cast<int>(p.size());
  if (k < 1 || k > n)
    throw Error("InvalidK", "k = " + std::to_string(k) + " with N = " +
                                std::to_string(n));
  int nonzero = 0;
  for (double v : p) nonzero += (v > 0.0);
  if (nonzero < k)
    throw Error("InfeasibleCapping",
                std::to_string(nonzero) + " nonzero entries, need k = " +
                    std::to_string(k));

  CappedDistribution out;
  out.k = k;
  out.pinned.assign(n, 0);
  const double cap = 1.0 / k;

  const double max_p = *std::max_element(p.begin(), p.end());
  if (max_p <= cap) {
    // Already in P_k (boundary max == 1/k included). Entries sitting
    // exactly at the cap count as pinned, so re-projecting a projected
    // vector reports the same pinned set.
    out.p_hat = p;
    for (int i = 0; i < n; ++i) out.pinned[i] = (p[i] == cap);
    return out;
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&p](int a, int b) { return p[a] > p[b]; });

  // suffix[i] = sum of the entries ranked i and below.
  std::vector<double> suffix(n + 1, 0.0);
  for (int i = n - 1; i >= 0; --i) suffix[i] = suffix[i + 1] + p[order[i]];

  for (int pinned_count = 1; pinned_count <= k; ++pinned_count) {
    const double target =
        static_cast<double>(k - pinned_count) / static_cast<double>(k);
    const double rem = suffix[pinned_count];
    const bool accept =
        pinned_count == k ||
        (p[order[pinned_count]] / rem) * target <= cap;
    if (!accept) continue;

    out.p_hat.assign(n, 0.0);
    for (int j = 0; j < pinned_count; ++j) out.p_hat[order[j]] = cap;
    if (pinned_count < k) {
      for (int j = pinned_count; j < n; ++j)
        out.p_hat[order[j]] = (p[order[j]] / rem) * target;
    }
    // Entries scaled to exactly 1/k (forced when only k arms are positive)
    // count as pinned too; "pinned" means held at the cap in the output.
    for (int i = 0; i < n; ++i) out.pinned[i] = (out.p_hat[i] == cap);
    return out;
  }
  throw Error("InfeasibleCapping", "no feasible pinned prefix");
}

ScaledProbabilityVector scaled_probabilities(const WeightVector& w,
                                             const AvailabilitySet& s, int k) {
  if (k < 1 || k > w.size())
    throw Error("InvalidK", "k = " + std::to_string(k) + " with N = " +
                                std::to_string(w.size()));
  if (s.size() < k)
    throw Error("InsufficientArms", "|S| = " + std::to_string(s.size()) +
                                        " < k = " + std::to_string(k));

  std::vector<double> p = normalize_over_set(w, s);
  const double cap = 1.0 / k;
  double max_p = 0.0;
  for (ArmIndex i : s.members()) max_p = std::max(max_p, p[i]);

  ScaledProbabilityVector result;
  result.k = k;
  if (max_p <= cap) {
    result.q = std::move(p);
  } else {
    result.q = cap_project(p, k).p_hat;
  }
  for (double& v : result.q) v *= k;
  return result;
}

ScaledProbabilityVector selection_marginals(const WeightVector& w,
                                            const AvailabilitySet& s, int k) {
  if (s.empty()) {
    ScaledProbabilityVector zero;
    zero.k = k;
    zero.q.assign(w.size(), 0.0);
    return zero;
  }
  if (s.size() < k) {
    ScaledProbabilityVector forced;
    forced.k = k;
    forced.q.assign(w.size(), 0.0);
    for (ArmIndex i : s.members()) forced.q[i] = 1.0;
    return forced;
  }
  return scaled_probabilities(w, s, k);
}

}  // namespace sleepx3
