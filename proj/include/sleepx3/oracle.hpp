#pragma once

#include <fstream>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "sleepx3/environment.hpp"

namespace sleepx3 {

// Best fixed mapping from availability set to k-subset, in hindsight.
// Defined only on the sets observed in the episode; unobserved sets cannot
// contribute to the comparator.
struct HindsightPolicy {
  int k = 0;
  std::map<std::vector<ArmIndex>, std::vector<ArmIndex>> table;

  const std::vector<ArmIndex>& action(const AvailabilitySet& s) const;
};

// Read-only view of the full loss history (row per round), backed either
// by the in-memory matrix or by the episode's spill file.
class LossMatrixView {
 public:
  LossMatrixView(const double* data, int n) : data_(data), n_(n) {}

  static LossMatrixView of(const EpisodeResult& episode);

  int arms() const noexcept { return n_; }
  const double* row(std::int64_t t) const;  // t in [1, rounds]

 private:
  LossMatrixView() = default;

  const double* data_ = nullptr;
  int n_ = 0;
  std::shared_ptr<std::ifstream> file_;
  std::shared_ptr<std::vector<double>> buffer_;
  std::shared_ptr<detail::TempFile> keep_alive_;
};

// For each observed set S, the k arms of S with the smallest loss summed
// over exactly the rounds where S_t = S (the comparator objective is
// separable across distinct sets). Ties break to the lowest index. Sets
// with |S| < k map to all of S, mirroring the selection fallback.
HindsightPolicy best_policy(std::span<const RoundRecord> records,
                            const LossMatrixView& losses, int k);

// Comparator cumulative loss sum_t sum_{i in pi(S_t)} loss_t(i).
double policy_loss(std::span<const RoundRecord> records,
                   const HindsightPolicy& policy, const LossMatrixView& losses);

// Realized regret: learner's incurred loss minus the comparator's. May be
// negative for a single seed.
double regret(std::span<const RoundRecord> records,
              const HindsightPolicy& policy, const LossMatrixView& losses);

// Convenience: regret against the best policy for the same record prefix.
double regret_against_best(std::span<const RoundRecord> records,
                           const LossMatrixView& losses, int k);

}  // namespace sleepx3
