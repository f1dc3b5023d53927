#include "sleepx3/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sleepx3/errors.hpp"

namespace sleepx3 {

namespace {
constexpr double kResidualZero = 1e-12;
constexpr double kInputTolerance = 1e-7;
}  // namespace

CornerDecomposition decompose(const ScaledProbabilityVector& q) {
  const int n = static_cast<int>(q.q.size());
  const int k = q.k;
  if (k < 1 || k > n)
    throw Error("NotInScaledCappedSimplex", "k = " + std::to_string(k));
  double sum = 0.0;
  for (double v : q.q) {
    if (v < -kInputTolerance || v > 1.0 + kInputTolerance)
      throw Error("NotInScaledCappedSimplex",
                  "entry " + std::to_string(v) + " outside [0,1]");
    sum += v;
  }
  if (std::abs(sum - k) > kInputTolerance)
    throw Error("NotInScaledCappedSimplex",
                "sum = " + std::to_string(sum) + ", expected " +
                    std::to_string(k));

  CornerDecomposition d;
  d.k = k;
  std::vector<double> residual = q.q;
  std::vector<int> order(n);
  double assigned = 0.0;  // coefficient mass already peeled off

  for (int iter = 0; iter < n; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&residual](int a, int b) {
      return residual[a] > residual[b];
    });
    if (residual[order[0]] <= kResidualZero) break;  // fully decomposed
    if (residual[order[k - 1]] <= kResidualZero)
      throw Error("NotInScaledCappedSimplex",
                  "fewer than k positive residual components");

    const double rem = 1.0 - assigned;
    const double smallest_chosen = residual[order[k - 1]];
    const double largest_unchosen = (k < n) ? residual[order[k]] : 0.0;
    double step = std::min(smallest_chosen, rem - largest_unchosen);
    step = std::min(step, rem);
    if (step <= 0.0)
      throw Error("NotInScaledCappedSimplex", "nonpositive peel step");

    Corner corner;
    corner.members.assign(order.begin(), order.begin() + k);
    std::sort(corner.members.begin(), corner.members.end());
    for (ArmIndex i : corner.members) {
      residual[i] -= step;
      if (residual[i] <= kResidualZero) residual[i] = 0.0;
    }
    d.terms.push_back({step, std::move(corner)});
    assigned += step;
    if (assigned >= 1.0) break;
  }

  if (d.terms.empty())
    throw Error("NotInScaledCappedSimplex", "nothing to decompose");
  const double leftover = *std::max_element(residual.begin(), residual.end());
  if (leftover > kResidualZero)
    throw Error("NotInScaledCappedSimplex",
                "residual mass " + std::to_string(leftover) +
                    " left after N iterations");
  // Fold residual float drift into the last coefficient so the mixture
  // stays exactly convex.
  d.terms.back().coefficient += 1.0 - assigned;
  return d;
}

Corner sample_corner(const CornerDecomposition& d, SeededRng& rng) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (const auto& term : d.terms) {
    acc += term.coefficient;
    if (u < acc) return term.corner;
  }
  return d.terms.back().corner;
}

}  // namespace sleepx3
