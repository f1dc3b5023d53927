#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sleepx3/core.hpp"
#include "sleepx3/decomposition.hpp"
#include "sleepx3/estimator.hpp"
#include "sleepx3/projection.hpp"
#include "sleepx3/rng.hpp"

namespace sleepx3 {

enum class EstimatorVariant { kExact, kMonteCarlo };

std::string to_string(EstimatorVariant v);
EstimatorVariant estimator_variant_from_string(const std::string& s);

// Learning-rate and stabilizer schedule.
//
//   eta      = min{1, sqrt(ln(N/k) / (N T))}
//   delta    = min{0.5, N / T^2}
//   lambda_t = min{1, 2kN sqrt(2 log(N/delta) / t) + 8kN log(N/delta) / (3t)}
// for the exact estimator, and
//   lambda_t = min{1, 4kN sqrt(log(2N/delta) / t) + 8kN log(2N/delta) / (3t)}
// for the Monte Carlo one.
struct ParameterSchedule {
  double eta = 0.0;
  double delta = 0.0;
  EstimatorVariant lambda_variant = EstimatorVariant::kExact;
  std::int64_t horizon = 0;
  bool delta_clamped = false;
  // Estimator operation knobs (not part of the analysis): cap on Monte
  // Carlo samples per round (0 = uncapped schedule samples = t), and the
  // exact enumeration limit.
  std::int64_t mc_sample_cap = 2000;
  int enumeration_limit = kDefaultEnumerationLimit;
  // Diagnostic override: when set, lambda_at returns this value.
  std::optional<double> lambda_override;

  static ParameterSchedule for_horizon(int n, int k, std::int64_t horizon,
                                       EstimatorVariant variant);

  // Stabilizer for round t >= 1; non-increasing in t, always in (0, 1].
  double lambda_at(std::int64_t t, int n, int k) const;
};

struct SelectionResult {
  Corner chosen;
  ScaledProbabilityVector q_scaled;
  int decomposition_size = 0;
  // Set when |S_t| < k forced selecting all of S_t.
  bool degenerate = false;
};

// Sleeping EXP3 with multiple plays. One select/feedback cycle per round:
//
//   select:   q^{S_t} via capping projection, corner decomposition, draw.
//   feedback: record S_t into the availability estimate, estimate the
//             joint selection probability q_hat (exact enumeration or
//             Monte Carlo), form lhat(i) = loss(i) / (q_hat(i) + lambda_t)
//             for the played arms, decay log-weights by eta * lhat.
//
// Single-owner mutable; never share an instance across threads.
class PolicyState {
 public:
  PolicyState(int n, int k, ParameterSchedule schedule, std::uint64_t seed);

  int arms() const noexcept { return n_; }
  int plays() const noexcept { return k_; }
  std::int64_t round() const noexcept { return completed_rounds_; }
  const ParameterSchedule& schedule() const noexcept { return schedule_; }
  const WeightVector& weights() const noexcept { return weights_; }
  const AvailabilityEstimate& availability() const noexcept { return avail_; }
  bool feedback_pending() const noexcept { return pending_.has_value(); }

  // lambda for the round currently in flight (completed + 1).
  double current_lambda() const;

  // Selection law marginals for an availability set, without starting a
  // round. P(i in chosen | s) = q(i).
  ScaledProbabilityVector selection_distribution(
      const AvailabilitySet& s) const;

  SelectionResult select(const AvailabilitySet& s);
  void feedback(const LossVector& losses);

  // Consumes a round in which no selection happened (empty S_t):
  // availability counts and the round counter advance, weights do not.
  void skip_round(const AvailabilitySet& s);

  // Structured-text snapshot for pause/resume and golden traces; only
  // legal between rounds (no feedback pending).
  std::string snapshot() const;
  static PolicyState restore(const std::string& snapshot_json);

 private:
  struct PendingRound {
    AvailabilitySet available;
    std::vector<ArmIndex> chosen;
    bool degenerate = false;
  };

  std::vector<double> joint_probability_estimate();

  int n_;
  int k_;
  ParameterSchedule schedule_;
  WeightVector weights_;
  AvailabilityEstimate avail_;
  SeededRng rng_;
  std::int64_t completed_rounds_ = 0;
  std::optional<PendingRound> pending_;
};

// Horizon-free wrapper (an extension beyond the fixed-horizon analysis):
// runs fresh PolicyState epochs with horizons 1, 2, 4, ..., restarting the
// schedule whenever the round count crosses a power of two.
class DoublingPolicy {
 public:
  DoublingPolicy(int n, int k, EstimatorVariant variant, std::uint64_t seed);

  std::int64_t round() const noexcept { return completed_rounds_; }
  std::int64_t current_epoch_horizon() const noexcept {
    return inner_.schedule().horizon;
  }
  const PolicyState& inner() const noexcept { return inner_; }

  SelectionResult select(const AvailabilitySet& s);
  void feedback(const LossVector& losses);
  void skip_round(const AvailabilitySet& s);

 private:
  void roll_epoch_if_needed();

  int n_;
  int k_;
  EstimatorVariant variant_;
  std::uint64_t seed_;
  int epoch_ = 0;
  std::int64_t completed_rounds_ = 0;
  PolicyState inner_;
};

}  // namespace sleepx3
