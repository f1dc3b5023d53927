#pragma once

#include <vector>

#include "sleepx3/core.hpp"
#include "sleepx3/rng.hpp"

namespace sleepx3 {

// A {0,1}-corner of the scaled capped simplex: exactly k distinct arms.
struct Corner {
  std::vector<ArmIndex> members;  // sorted ascending

  bool operator==(const Corner& other) const = default;
};

// Convex combination of corners reconstructing a scaled probability
// vector: sum_t coefficient_t * indicator(corner_t) == q componentwise.
struct CornerDecomposition {
  struct Term {
    double coefficient = 0.0;
    Corner corner;
  };
  std::vector<Term> terms;
  int k = 0;
};

// Greedy mixture decomposition. Each iteration selects the k largest
// residual components (ties to the lowest index; components sitting at the
// residual cap are necessarily among them), and peels off
//   c = min(smallest chosen, rem - largest unchosen)
// where rem is the coefficient mass still to be assigned (1 on the first
// iteration, matching the printed min(s, 1-l) rule). Terminates within N
// iterations; residual drift below 1e-12 per component is folded into the
// last coefficient.
//
// Errors: "NotInScaledCappedSimplex" when q's entries or sum violate the
// scaled-capped-simplex invariants beyond 1e-7.
CornerDecomposition decompose(const ScaledProbabilityVector& q);

// Draws a corner with probability equal to its coefficient, so the
// marginal inclusion probability of arm i equals q(i).
Corner sample_corner(const CornerDecomposition& d, SeededRng& rng);

}  // namespace sleepx3
