#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "sleepx3/environment.hpp"
#include "sleepx3/errors.hpp"
#include "sleepx3/oracle.hpp"

using namespace sleepx3;

namespace {

EnvironmentConfig base_config(int n, int k, std::int64_t horizon,
                              std::uint64_t seed) {
  EnvironmentConfig cfg;
  cfg.n = n;
  cfg.k = k;
  cfg.horizon = horizon;
  cfg.availability.assign(n, 0.8);
  cfg.loss_generator.kind = LossGeneratorSpec::Kind::kConstantGap;
  cfg.loss_generator.means = evenly_spaced_means(n, 0.1, 0.9);
  cfg.seed = seed;
  return cfg;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("evenly spaced means") {
  const auto means = evenly_spaced_means(8, 0.1, 0.9);
  CHECK(means.front() == doctest::Approx(0.1));
  CHECK(means.back() == doctest::Approx(0.9));
  for (int i = 1; i < 8; ++i)
    CHECK(means[i] - means[i - 1] == doctest::Approx(0.8 / 7).epsilon(1e-12));
}

TEST_CASE("config validation reports the offending field") {
  auto cfg = base_config(4, 2, 10, 1);
  cfg.k = 5;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("environment.k"),
                       Error);
  cfg = base_config(4, 2, 10, 1);
  cfg.availability = {0.5, 0.5};
  CHECK_THROWS_WITH_AS(cfg.validate(),
                       doctest::Contains("environment.availability"), Error);
  cfg = base_config(4, 2, 10, 1);
  cfg.loss_generator.means.push_back(0.5);
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("loss_generator"),
                       Error);
}

TEST_CASE("all-ones availability fills every round") {
  auto cfg = base_config(5, 2, 50, 77);
  cfg.availability.assign(5, 1.0);
  const Environment env(cfg);
  for (std::int64_t t = 1; t <= 50; ++t)
    CHECK(env.round(t).available.size() == 5);
}

TEST_CASE("constant-gap: probability-one means always lose") {
  auto cfg = base_config(3, 1, 20, 5);
  cfg.loss_generator.means = {1.0, 0.0, 1.0};
  const Environment env(cfg);
  for (std::int64_t t = 1; t <= 20; ++t) {
    const auto losses = env.round(t).losses;
    CHECK(losses == std::vector<double>{1.0, 0.0, 1.0});
  }
}

TEST_CASE("periodic-swap: means reverse at every period boundary") {
  auto cfg = base_config(2, 1, 20, 9);
  cfg.loss_generator.kind = LossGeneratorSpec::Kind::kPeriodicSwap;
  cfg.loss_generator.means = {0.0, 1.0};
  cfg.loss_generator.period = 5;
  const Environment env(cfg);
  for (std::int64_t t = 1; t <= 20; ++t) {
    const auto losses = env.round(t).losses;
    const bool swapped = (t / 5) % 2 == 1;  // flips at t = 5, 10, ...
    CHECK(losses[0] == (swapped ? 1.0 : 0.0));
    CHECK(losses[1] == (swapped ? 0.0 : 1.0));
  }
}

TEST_CASE("drifting losses stay in range and follow the period") {
  auto cfg = base_config(4, 2, 100, 3);
  cfg.loss_generator.kind = LossGeneratorSpec::Kind::kDrifting;
  cfg.loss_generator.amplitude = 0.4;
  cfg.loss_generator.period = 25;
  const Environment env(cfg);
  for (std::int64_t t = 1; t <= 100; ++t) {
    for (double v : env.round(t).losses) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  // Same phase one period apart.
  CHECK(env.round(1).losses == env.round(26).losses);
}

TEST_CASE("losses are oblivious to the availability pattern") {
  auto cfg_a = base_config(4, 2, 60, 123);
  auto cfg_b = cfg_a;
  cfg_b.availability = {0.1, 0.2, 0.3, 0.4};
  const Environment env_a(cfg_a), env_b(cfg_b);
  for (std::int64_t t = 1; t <= 60; ++t)
    CHECK(env_a.round(t).losses == env_b.round(t).losses);
}

TEST_CASE("rounds are pure functions of (seed, t), any query order") {
  const auto cfg = base_config(4, 2, 30, 55);
  const Environment env(cfg);
  std::vector<RoundData> forward;
  for (std::int64_t t = 1; t <= 30; ++t) forward.push_back(env.round(t));
  const Environment env2(cfg);
  for (std::int64_t t = 30; t >= 1; --t) {
    const auto data = env2.round(t);
    CHECK(data.available.members() == forward[t - 1].available.members());
    CHECK(data.losses == forward[t - 1].losses);
  }
}

TEST_CASE("per-arm availability frequency matches a_i at 3 sigma") {
  auto cfg = base_config(3, 1, 100000, 2020);
  cfg.availability = {0.25, 0.6, 0.95};
  const Environment env(cfg);
  std::vector<int> counts(3, 0);
  for (std::int64_t t = 1; t <= cfg.horizon; ++t) {
    const RoundData data = env.round(t);
    for (ArmIndex i : data.available.members()) ++counts[i];
  }
  for (int i = 0; i < 3; ++i) {
    const double a = cfg.availability[i];
    const double freq = static_cast<double>(counts[i]) / cfg.horizon;
    CHECK(std::abs(freq - a) <=
          3.0 * std::sqrt(a * (1 - a) / cfg.horizon));
  }
}

TEST_CASE("trace file round-trip") {
  const auto cfg = base_config(4, 2, 25, 808);
  const Environment env(cfg);
  std::vector<RoundData> rounds;
  for (std::int64_t t = 1; t <= 25; ++t) rounds.push_back(env.round(t));

  const std::string path = temp_path("sleepx3_trace_roundtrip.txt");
  write_trace_file(path, rounds);
  const auto replayed = read_trace_file(path, 4);
  REQUIRE(replayed.size() == rounds.size());
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    CHECK(replayed[i].available.members() == rounds[i].available.members());
    CHECK(replayed[i].losses == rounds[i].losses);  // 0/1 losses: exact
  }

  // Replay environment reproduces the same rounds.
  auto replay_cfg = cfg;
  replay_cfg.loss_generator = {};
  replay_cfg.loss_generator.kind = LossGeneratorSpec::Kind::kReplayFile;
  replay_cfg.loss_generator.path = path;
  const Environment replay_env(replay_cfg);
  for (std::int64_t t = 1; t <= 25; ++t) {
    CHECK(replay_env.round(t).available.members() ==
          rounds[t - 1].available.members());
    CHECK(replay_env.round(t).losses == rounds[t - 1].losses);
  }
  std::remove(path.c_str());
}

TEST_CASE("replay trace shorter than the horizon errors") {
  const auto cfg = base_config(3, 1, 10, 4);
  const Environment env(cfg);
  std::vector<RoundData> rounds;
  for (std::int64_t t = 1; t <= 5; ++t) rounds.push_back(env.round(t));
  const std::string path = temp_path("sleepx3_trace_short.txt");
  write_trace_file(path, rounds);

  auto replay_cfg = cfg;
  replay_cfg.loss_generator = {};
  replay_cfg.loss_generator.kind = LossGeneratorSpec::Kind::kReplayFile;
  replay_cfg.loss_generator.path = path;
  const Environment replay_env(replay_cfg);
  CHECK_NOTHROW(replay_env.round(5));
  CHECK_THROWS_WITH_AS(replay_env.round(6), doctest::Contains("TraceTooShort"),
                       Error);
  std::remove(path.c_str());
}

TEST_CASE("run_episode: single round produces a single record") {
  const auto cfg = base_config(4, 2, 1, 31);
  PolicyState state(4, 2,
                    ParameterSchedule::for_horizon(4, 2, 1,
                                                   EstimatorVariant::kExact),
                    31);
  const auto episode = run_episode(cfg, state);
  CHECK(episode.records.size() == 1);
  CHECK(episode.losses_retained);
}

TEST_CASE("run_episode: zero losses leave weights unchanged") {
  auto cfg = base_config(4, 2, 40, 77);
  cfg.loss_generator.means.assign(4, 0.0);
  PolicyState state(4, 2,
                    ParameterSchedule::for_horizon(4, 2, 40,
                                                   EstimatorVariant::kExact),
                    77);
  const auto episode = run_episode(cfg, state);
  double total = 0.0;
  for (const auto& record : episode.records)
    for (double v : record.losses_incurred) total += v;
  CHECK(total == 0.0);
  for (int i = 0; i < 4; ++i) CHECK(state.weights().log_weight(i) == 0.0);
}

TEST_CASE("run_episode: empty rounds are degenerate, weights untouched") {
  auto cfg = base_config(3, 2, 25, 5);
  cfg.availability.assign(3, 0.0);
  PolicyState state(3, 2,
                    ParameterSchedule::for_horizon(3, 2, 25,
                                                   EstimatorVariant::kExact),
                    5);
  const auto episode = run_episode(cfg, state);
  for (const auto& record : episode.records) {
    CHECK(record.degenerate);
    CHECK(record.chosen.empty());
  }
  CHECK(state.round() == 25);
  CHECK(state.availability().rounds() == 25);
  for (int i = 0; i < 3; ++i) CHECK(state.weights().log_weight(i) == 0.0);
}

TEST_CASE("run_episode: rejects mismatched policy dimensions") {
  const auto cfg = base_config(4, 2, 5, 1);
  PolicyState state(5, 2,
                    ParameterSchedule::for_horizon(5, 2, 5,
                                                   EstimatorVariant::kExact),
                    1);
  CHECK_THROWS_WITH_AS(run_episode(cfg, state), doctest::Contains("ConfigError"),
                       Error);
}

TEST_CASE("run_episode: spilled loss history matches the in-memory one") {
  const auto cfg = base_config(4, 2, 60, 1234);
  const auto sched =
      ParameterSchedule::for_horizon(4, 2, 60, EstimatorVariant::kExact);

  PolicyState mem_state(4, 2, sched, 1234);
  const auto in_memory = run_episode(cfg, mem_state);
  REQUIRE(in_memory.losses_retained);

  PolicyState spill_state(4, 2, sched, 1234);
  const auto spilled = run_episode(cfg, spill_state, {}, /*retention_limit=*/8);
  REQUIRE_FALSE(spilled.losses_retained);
  REQUIRE(spilled.spill != nullptr);
  const std::string spill_path = spilled.spill->path;
  CHECK(std::filesystem::exists(spill_path));

  const LossMatrixView mem_view = LossMatrixView::of(in_memory);
  const LossMatrixView file_view = LossMatrixView::of(spilled);
  for (std::int64_t t = 1; t <= 60; ++t) {
    const double* a = mem_view.row(t);
    const double* b = file_view.row(t);
    for (int i = 0; i < 4; ++i) CHECK(a[i] == b[i]);
  }
  CHECK(regret_against_best(in_memory.records, mem_view, 2) ==
        regret_against_best(spilled.records, file_view, 2));
}

TEST_CASE("run_episode: spill file is removed with the episode") {
  std::string spill_path;
  {
    const auto cfg = base_config(3, 1, 10, 9);
    PolicyState state(3, 1,
                      ParameterSchedule::for_horizon(3, 1, 10,
                                                     EstimatorVariant::kExact),
                      9);
    const auto episode = run_episode(cfg, state, {}, /*retention_limit=*/2);
    REQUIRE(episode.spill != nullptr);
    spill_path = episode.spill->path;
    CHECK(std::filesystem::exists(spill_path));
  }
  CHECK_FALSE(std::filesystem::exists(spill_path));
}

TEST_CASE("run_episode: cumulative incurred loss equals the record sum") {
  const auto cfg = base_config(5, 2, 200, 404);
  PolicyState state(5, 2,
                    ParameterSchedule::for_horizon(5, 2, 200,
                                                   EstimatorVariant::kExact),
                    404);
  const auto episode = run_episode(cfg, state);
  CHECK(episode.records.size() == 200);
  for (const auto& record : episode.records) {
    CHECK(std::is_sorted(record.chosen.begin(), record.chosen.end()));
    for (ArmIndex i : record.chosen) CHECK(record.available.contains(i));
    CHECK(record.losses_incurred.size() == record.chosen.size());
    if (!record.degenerate) CHECK(record.chosen.size() == 2);
  }
}
