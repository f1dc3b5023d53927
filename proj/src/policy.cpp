#include "sleepx3/policy.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "sleepx3/errors.hpp"

namespace sleepx3 {

using ordered_json = nlohmann::ordered_json;

std::string to_string(EstimatorVariant v) {
  return v == EstimatorVariant::kExact ? "exact" : "monte_carlo";
}

EstimatorVariant estimator_variant_from_string(const std::string& s) {
  if (s == "exact") return EstimatorVariant::kExact;
  if (s == "monte_carlo") return EstimatorVariant::kMonteCarlo;
  throw Error("ConfigError", "unknown estimator variant '" + s + "'");
}

ParameterSchedule ParameterSchedule::for_horizon(int n, int k,
                                                 std::int64_t horizon,
                                                 EstimatorVariant variant) {
  if (n < 1 || k < 1 || k > n)
    throw Error("InvalidArgument", "need 1 <= k <= N");
  if (horizon < 1) throw Error("InvalidArgument", "horizon must be >= 1");
  ParameterSchedule s;
  s.lambda_variant = variant;
  s.horizon = horizon;
  const double nd = static_cast<double>(n);
  const double td = static_cast<double>(horizon);
  // N == k degenerates ln(N/k) to 0; every feasible round is then forced,
  // so any positive eta is equivalent.
  s.eta = std::min(1.0, std::sqrt(std::log(nd / k) / (nd * td)));
  s.eta = std::max(s.eta, 1e-12);
  const double raw_delta = nd / (td * td);
  s.delta = std::min(0.5, raw_delta);
  s.delta_clamped = raw_delta > 0.5;
  return s;
}

double ParameterSchedule::lambda_at(std::int64_t t, int n, int k) const {
  if (lambda_override.has_value()) return *lambda_override;
  if (t < 1) throw Error("InvalidArgument", "lambda_at requires t >= 1");
  const double kn = static_cast<double>(k) * static_cast<double>(n);
  const double td = static_cast<double>(t);
  double value;
  if (lambda_variant == EstimatorVariant::kExact) {
    const double log_term = std::log(static_cast<double>(n) / delta);
    value = 2.0 * kn * std::sqrt(2.0 * log_term / td) +
            8.0 * kn * log_term / (3.0 * td);
  } else {
    const double log_term = std::log(2.0 * static_cast<double>(n) / delta);
    value = 4.0 * kn * std::sqrt(log_term / td) +
            8.0 * kn * log_term / (3.0 * td);
  }
  return std::min(1.0, value);
}

PolicyState::PolicyState(int n, int k, ParameterSchedule schedule,
                         std::uint64_t seed)
    : n_(n),
      k_(k),
      schedule_(schedule),
      weights_(n),
      avail_(n),
      rng_(SeededRng::derive(seed, /*stream=*/0x706f6c69)) {
  if (k < 1 || k > n)
    throw Error("InvalidK",
                "k = " + std::to_string(k) + " with N = " + std::to_string(n));
  if (!(schedule_.eta > 0.0))
    throw Error("InvalidArgument", "eta must be > 0");
  if (!(schedule_.delta > 0.0 && schedule_.delta < 1.0))
    throw Error("InvalidArgument", "delta must be in (0,1)");
  if (schedule_.lambda_variant == EstimatorVariant::kExact &&
      n > schedule_.enumeration_limit)
    throw Error("EnumerationTooLarge",
                "exact estimator requires N <= " +
                    std::to_string(schedule_.enumeration_limit));
}

double PolicyState::current_lambda() const {
  return schedule_.lambda_at(completed_rounds_ + 1, n_, k_);
}

ScaledProbabilityVector PolicyState::selection_distribution(
    const AvailabilitySet& s) const {
  return selection_marginals(weights_, s, k_);
}

SelectionResult PolicyState::select(const AvailabilitySet& s) {
  if (pending_.has_value())
    throw Error("FeedbackPending",
                "select called before feedback for the previous round");
  if (s.empty())
    throw Error("EmptyAvailabilitySet",
                "no arms available; use skip_round for empty rounds");

  SelectionResult result;
  if (s.size() < k_) {
    // Fewer available arms than plays: take all of them.
    result.degenerate = true;
    result.q_scaled = selection_marginals(weights_, s, k_);
    result.chosen.members = s.members();
    result.decomposition_size = 1;
  } else {
    result.q_scaled = scaled_probabilities(weights_, s, k_);
    const CornerDecomposition d = decompose(result.q_scaled);
    result.chosen = sample_corner(d, rng_);
    result.decomposition_size = static_cast<int>(d.terms.size());
  }
  pending_ = PendingRound{s, result.chosen.members, result.degenerate};
  return result;
}

std::vector<double> PolicyState::joint_probability_estimate() {
  if (schedule_.lambda_variant == EstimatorVariant::kExact)
    return exact_joint_probability(avail_, weights_, k_,
                                   schedule_.enumeration_limit);
  std::int64_t samples = avail_.rounds();
  if (schedule_.mc_sample_cap > 0)
    samples = std::min(samples, schedule_.mc_sample_cap);
  samples = std::max<std::int64_t>(samples, 1);
  return monte_carlo_joint_probability(avail_, weights_, k_, samples, rng_);
}

void PolicyState::feedback(const LossVector& losses) {
  if (!pending_.has_value())
    throw Error("NoPendingSelection", "feedback without a pending select");

  const auto& entries = losses.entries();
  if (entries.size() != pending_->chosen.size())
    throw Error("FeedbackMismatch",
                "got " + std::to_string(entries.size()) + " losses for " +
                    std::to_string(pending_->chosen.size()) + " chosen arms");
  for (std::size_t j = 0; j < entries.size(); ++j) {
    if (entries[j].first != pending_->chosen[j])
      throw Error("FeedbackMismatch",
                  "loss for arm " + std::to_string(entries[j].first) +
                      " which was not chosen");
    if (!(entries[j].second >= 0.0 && entries[j].second <= 1.0))
      throw Error("LossOutOfRange", std::to_string(entries[j].second));
  }

  // The availability estimate must include the current round's set
  // before the joint probability is computed.
  avail_.record(pending_->available);
  const std::int64_t t = completed_rounds_ + 1;
  const double lambda = schedule_.lambda_at(t, n_, k_);
  const std::vector<double> q_hat = joint_probability_estimate();

  for (const auto& [arm, loss] : entries) {
    const double estimated = loss / (q_hat[arm] + lambda);
    weights_.decay(arm, schedule_.eta * estimated);
  }
  completed_rounds_ = t;
  pending_.reset();
}

void PolicyState::skip_round(const AvailabilitySet& s) {
  if (pending_.has_value())
    throw Error("FeedbackPending",
                "skip_round called before feedback for the previous round");
  avail_.record(s);
  ++completed_rounds_;
}

std::string PolicyState::snapshot() const {
  if (pending_.has_value())
    throw Error("FeedbackPending", "cannot snapshot mid-round");
  ordered_json j;
  j["format"] = "sleepx3-policy-v1";
  j["n"] = n_;
  j["k"] = k_;
  j["round"] = completed_rounds_;
  j["log_weights"] = weights_.log_weights();
  j["availability_counts"] = avail_.counts();
  j["availability_rounds"] = avail_.rounds();
  j["schedule"] = {
      {"eta", schedule_.eta},
      {"delta", schedule_.delta},
      {"lambda_variant", to_string(schedule_.lambda_variant)},
      {"horizon", schedule_.horizon},
      {"delta_clamped", schedule_.delta_clamped},
      {"mc_sample_cap", schedule_.mc_sample_cap},
      {"enumeration_limit", schedule_.enumeration_limit},
  };
  if (schedule_.lambda_override.has_value())
    j["schedule"]["lambda_override"] = *schedule_.lambda_override;
  j["rng_seed"] = rng_.seed();
  j["rng_state"] = rng_.state();
  return j.dump(2);
}

PolicyState PolicyState::restore(const std::string& snapshot_json) {
  ordered_json j;
  try {
    j = ordered_json::parse(snapshot_json);
  } catch (const std::exception& e) {
    throw Error("SnapshotParseError", e.what());
  }
  if (j.value("format", "") != "sleepx3-policy-v1")
    throw Error("SnapshotParseError", "unknown snapshot format");

  ParameterSchedule schedule;
  const auto& js = j.at("schedule");
  schedule.eta = js.at("eta").get<double>();
  schedule.delta = js.at("delta").get<double>();
  schedule.lambda_variant =
      estimator_variant_from_string(js.at("lambda_variant").get<std::string>());
  schedule.horizon = js.at("horizon").get<std::int64_t>();
  schedule.delta_clamped = js.at("delta_clamped").get<bool>();
  schedule.mc_sample_cap = js.at("mc_sample_cap").get<std::int64_t>();
  schedule.enumeration_limit = js.at("enumeration_limit").get<int>();
  if (js.contains("lambda_override"))
    schedule.lambda_override = js.at("lambda_override").get<double>();

  PolicyState state(j.at("n").get<int>(), j.at("k").get<int>(), schedule,
                    j.at("rng_seed").get<std::uint64_t>());
  state.weights_ =
      WeightVector::from_log_weights(j.at("log_weights").get<std::vector<double>>());
  state.avail_.restore(
      j.at("availability_counts").get<std::vector<std::int64_t>>(),
      j.at("availability_rounds").get<std::int64_t>());
  state.completed_rounds_ = j.at("round").get<std::int64_t>();
  state.rng_ = SeededRng::from_state(
      j.at("rng_seed").get<std::uint64_t>(),
      j.at("rng_state").get<std::array<std::uint64_t, 4>>());
  return state;
}

DoublingPolicy::DoublingPolicy(int n, int k, EstimatorVariant variant,
                               std::uint64_t seed)
    : n_(n),
      k_(k),
      variant_(variant),
      seed_(seed),
      inner_(n, k, ParameterSchedule::for_horizon(n, k, 1, variant),
             SeededRng::derive(seed, /*stream=*/0xd0b1, 0).seed()) {}

void DoublingPolicy::roll_epoch_if_needed() {
  // Epoch j handles 2^j rounds with a horizon-2^j schedule.
  const std::int64_t epoch_end = (std::int64_t{1} << (epoch_ + 1)) - 1;
  if (completed_rounds_ < epoch_end) return;
  ++epoch_;
  const std::int64_t horizon = std::int64_t{1} << epoch_;
  inner_ = PolicyState(
      n_, k_, ParameterSchedule::for_horizon(n_, k_, horizon, variant_),
      SeededRng::derive(seed_, /*stream=*/0xd0b1, static_cast<std::uint64_t>(epoch_))
          .seed());
}

SelectionResult DoublingPolicy::select(const AvailabilitySet& s) {
  return inner_.select(s);
}

void DoublingPolicy::feedback(const LossVector& losses) {
  inner_.feedback(losses);
  ++completed_rounds_;
  roll_epoch_if_needed();
}

void DoublingPolicy::skip_round(const AvailabilitySet& s) {
  inner_.skip_round(s);
  ++completed_rounds_;
  roll_epoch_if_needed();
}

}  // namespace sleepx3
