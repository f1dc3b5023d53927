#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sleepx3/core.hpp"
#include "sleepx3/policy.hpp"

namespace sleepx3 {

// Oblivious loss process: losses are a fixed function of (t, i, loss seed),
// never of the availability draw or the learner's choices.
struct LossGeneratorSpec {
  enum class Kind { kConstantGap, kPeriodicSwap, kDrifting, kReplayFile };

  Kind kind = Kind::kConstantGap;
  // constant-gap, periodic-swap: per-arm Bernoulli means.
  std::vector<double> means;
  // periodic-swap: mean order reverses every `period` rounds.
  // drifting: sinusoid period.
  std::int64_t period = 0;
  // drifting: deterministic losses 0.5 + amplitude*sin(...), clipped.
  double amplitude = 0.0;
  // replay-file: path of a trace written by write_trace_file.
  std::string path;
};

std::string to_string(LossGeneratorSpec::Kind kind);
LossGeneratorSpec::Kind loss_kind_from_string(const std::string& s);

std::vector<double> evenly_spaced_means(int n, double low, double high);

struct EnvironmentConfig {
  int n = 0;
  int k = 0;
  std::int64_t horizon = 0;
  std::vector<double> availability;
  LossGeneratorSpec loss_generator;
  std::uint64_t seed = 0;

  void validate() const;  // throws "ConfigError" with the offending field
};

// Per-round trace row.
struct RoundRecord {
  std::int64_t t = 0;
  AvailabilitySet available;
  std::vector<ArmIndex> chosen;
  std::vector<double> losses_incurred;  // aligned with chosen
  double lambda = 0.0;
  bool degenerate = false;
};

struct RoundData {
  AvailabilitySet available;
  std::vector<double> losses;  // full vector over [N], hidden from the policy
};

// Simulation world. Availability and losses come from two independent
// streams derived per round from the master seed, so round t is a pure
// function of (cfg, t) regardless of query order.
class Environment {
 public:
  explicit Environment(EnvironmentConfig cfg);

  const EnvironmentConfig& config() const noexcept { return cfg_; }

  RoundData round(std::int64_t t) const;  // t in [1, horizon]

 private:
  std::vector<double> losses_at(std::int64_t t) const;

  EnvironmentConfig cfg_;
  std::vector<std::vector<double>> replay_losses_;
  std::vector<AvailabilitySet> replay_available_;
};

// Full loss history of an episode, row per round, needed by the regret
// oracle. Kept in memory while n*horizon stays within `kLossRetentionLimit`;
// bigger episodes spill the rows to a temporary file of raw doubles that is
// removed when the last EpisodeResult copy goes away.
inline constexpr std::int64_t kLossRetentionLimit = 100'000'000;

namespace detail {
struct TempFile {
  std::string path;
  explicit TempFile(std::string p) : path(std::move(p)) {}
  ~TempFile();
  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;
};
}  // namespace detail

struct EpisodeResult {
  std::vector<RoundRecord> records;
  std::vector<double> loss_matrix;  // flat, row-major, n per row (in-memory)
  std::shared_ptr<detail::TempFile> spill;  // set when spilled to disk
  int n = 0;
  bool losses_retained = false;
};

// Runs generate -> select -> feedback for t = 1..horizon. Empty rounds are
// recorded as degenerate and skip selection; rounds with |S_t| < k select
// all of S_t. `on_round`, when set, observes each record as it completes.
EpisodeResult run_episode(
    const EnvironmentConfig& cfg, PolicyState& state,
    const std::function<void(const RoundRecord&)>& on_round = {},
    std::int64_t retention_limit = kLossRetentionLimit);

// Line-oriented replay format, one round per line:
//   t;available(comma-separated);loss(comma-separated N values, 9 decimals)
void write_trace_file(const std::string& path,
                      const std::vector<RoundData>& rounds);
std::vector<RoundData> read_trace_file(const std::string& path, int n);

}  // namespace sleepx3
