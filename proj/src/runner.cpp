#include "sleepx3/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "sleepx3/errors.hpp"
#include "sleepx3/format.hpp"

namespace sleepx3 {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

namespace {

double elapsed_ms(Clock::time_point from, Clock::time_point to) {
  return std::chrono::duration<double, std::milli>(to - from).count();
}

void reject_unknown_keys(const ordered_json& j,
                         std::initializer_list<const char*> allowed,
                         const std::string& path) {
  if (!j.is_object())
    throw Error("ConfigError", "expected an object at " + path);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* key) {
          return it.key() == key;
        }) == allowed.end())
      throw Error("ConfigError",
                  "unknown key '" + it.key() + "' at " + path);
  }
}

const ordered_json& require_key(const ordered_json& j, const char* key,
                                const std::string& path) {
  if (!j.contains(key))
    throw Error("ConfigError",
                "missing key '" + std::string(key) + "' at " + path);
  return j.at(key);
}

template <typename T>
T get_as(const ordered_json& j, const char* key, const std::string& path) {
  try {
    return require_key(j, key, path).get<T>();
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    throw Error("ConfigError",
                "bad value for '" + std::string(key) + "' at " + path);
  }
}

LossGeneratorSpec parse_loss_generator(const ordered_json& j,
                                       const std::string& path) {
  LossGeneratorSpec spec;
  spec.kind = loss_kind_from_string(get_as<std::string>(j, "kind", path));
  using Kind = LossGeneratorSpec::Kind;
  switch (spec.kind) {
    case Kind::kConstantGap:
      reject_unknown_keys(j, {"kind", "means"}, path);
      spec.means = get_as<std::vector<double>>(j, "means", path);
      break;
    case Kind::kPeriodicSwap:
      reject_unknown_keys(j, {"kind", "means", "period"}, path);
      spec.means = get_as<std::vector<double>>(j, "means", path);
      spec.period = get_as<std::int64_t>(j, "period", path);
      break;
    case Kind::kDrifting:
      reject_unknown_keys(j, {"kind", "amplitude", "period"}, path);
      spec.amplitude = get_as<double>(j, "amplitude", path);
      spec.period = get_as<std::int64_t>(j, "period", path);
      break;
    case Kind::kReplayFile:
      reject_unknown_keys(j, {"kind", "path"}, path);
      spec.path = get_as<std::string>(j, "path", path);
      break;
  }
  return spec;
}

EnvironmentConfig parse_environment(const ordered_json& j,
                                    const std::string& path) {
  reject_unknown_keys(
      j, {"N", "k", "T", "availability", "loss_generator", "seed"}, path);
  EnvironmentConfig cfg;
  cfg.n = get_as<int>(j, "N", path);
  cfg.k = get_as<int>(j, "k", path);
  cfg.horizon = get_as<std::int64_t>(j, "T", path);
  cfg.availability = get_as<std::vector<double>>(j, "availability", path);
  cfg.loss_generator = parse_loss_generator(
      require_key(j, "loss_generator", path), path + ".loss_generator");
  cfg.seed = get_as<std::uint64_t>(j, "seed", path);
  return cfg;
}

std::vector<std::int64_t> make_checkpoints(std::int64_t horizon,
                                           std::int64_t every) {
  const std::int64_t step = every > 0 ? every : std::max<std::int64_t>(1, horizon / 100);
  std::vector<std::int64_t> points;
  for (std::int64_t t = step; t < horizon; t += step) points.push_back(t);
  points.push_back(horizon);
  return points;
}

void append_arm_list_quoted(std::string& out,
                            const std::vector<ArmIndex>& arms) {
  out += '"';
  for (std::size_t j = 0; j < arms.size(); ++j) {
    if (j > 0) out += ',';
    out += std::to_string(arms[j]);
  }
  out += '"';
}

void write_trace_csv(const std::string& path,
                     const std::vector<RoundRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("IoError", "cannot write '" + path + "'");
  out << "t,available,chosen,loss_sum,lambda,degenerate\n";
  std::string line;
  for (const auto& r : records) {
    line.clear();
    line += std::to_string(r.t);
    line += ',';
    append_arm_list_quoted(line, r.available.members());
    line += ',';
    append_arm_list_quoted(line, r.chosen);
    line += ',';
    const double loss_sum = std::accumulate(r.losses_incurred.begin(),
                                            r.losses_incurred.end(), 0.0);
    append_fixed9(line, loss_sum);
    line += ',';
    append_fixed9(line, r.lambda);
    line += ',';
    line += r.degenerate ? '1' : '0';
    line += '\n';
    out << line;
  }
}

ordered_json spec_to_json(const ExperimentSpec& spec) {
  ordered_json lg;
  const auto& g = spec.environment.loss_generator;
  lg["kind"] = to_string(g.kind);
  using Kind = LossGeneratorSpec::Kind;
  switch (g.kind) {
    case Kind::kConstantGap:
      lg["means"] = g.means;
      break;
    case Kind::kPeriodicSwap:
      lg["means"] = g.means;
      lg["period"] = g.period;
      break;
    case Kind::kDrifting:
      lg["amplitude"] = g.amplitude;
      lg["period"] = g.period;
      break;
    case Kind::kReplayFile:
      lg["path"] = g.path;
      break;
  }
  ordered_json env;
  env["N"] = spec.environment.n;
  env["k"] = spec.environment.k;
  env["T"] = spec.environment.horizon;
  env["availability"] = spec.environment.availability;
  env["loss_generator"] = lg;
  env["seed"] = spec.environment.seed;
  ordered_json j;
  j["environment"] = env;
  j["estimator_variant"] = to_string(spec.estimator_variant);
  j["mc_sample_cap"] = spec.mc_sample_cap;
  j["seeds"] = spec.seeds;
  j["output_dir"] = spec.output_dir;
  j["checkpoint_every"] = spec.checkpoint_every;
  return j;
}

}  // namespace

void ExperimentSpec::validate() const {
  environment.validate();
  if (seeds.empty()) throw Error("ConfigError", "seeds must not be empty");
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw Error("ConfigError", "seeds must be distinct");
  if (estimator_variant == EstimatorVariant::kMonteCarlo && mc_sample_cap < 1)
    throw Error("ConfigError",
                "mc_sample_cap must be >= 1 for the monte_carlo variant");
  if (estimator_variant == EstimatorVariant::kExact &&
      environment.n > kDefaultEnumerationLimit)
    throw Error("ConfigError",
                "exact variant requires N <= " +
                    std::to_string(kDefaultEnumerationLimit));
  if (checkpoint_every < 0)
    throw Error("ConfigError", "checkpoint_every must be >= 0");
  if (output_dir.empty())
    throw Error("ConfigError", "output_dir must not be empty");
}

ExperimentSpec ExperimentSpec::from_json_text(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw Error("ConfigError", std::string("invalid JSON: ") + e.what());
  }
  reject_unknown_keys(j,
                      {"environment", "estimator_variant", "mc_sample_cap",
                       "seeds", "output_dir", "checkpoint_every"},
                      "config");
  ExperimentSpec spec;
  spec.environment = parse_environment(
      require_key(j, "environment", "config"), "config.environment");
  spec.estimator_variant = estimator_variant_from_string(
      get_as<std::string>(j, "estimator_variant", "config"));
  if (j.contains("mc_sample_cap"))
    spec.mc_sample_cap = get_as<std::int64_t>(j, "mc_sample_cap", "config");
  spec.seeds = get_as<std::vector<std::uint64_t>>(j, "seeds", "config");
  if (j.contains("output_dir"))
    spec.output_dir = get_as<std::string>(j, "output_dir", "config");
  if (j.contains("checkpoint_every"))
    spec.checkpoint_every =
        get_as<std::int64_t>(j, "checkpoint_every", "config");
  spec.validate();
  return spec;
}

ExperimentSpec ExperimentSpec::from_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("ConfigError", "cannot read config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

std::string ExperimentSpec::to_json_text() const {
  return spec_to_json(*this).dump(2);
}

AggregateReport run_experiment(const ExperimentSpec& spec, int workers) {
  spec.validate();
  fs::create_directories(spec.output_dir);

  const std::int64_t horizon = spec.environment.horizon;
  const int n = spec.environment.n;
  const int k = spec.environment.k;
  const auto checkpoints = make_checkpoints(horizon, spec.checkpoint_every);
  const auto run_start = Clock::now();

  if (ParameterSchedule::for_horizon(n, k, horizon, spec.estimator_variant)
          .delta_clamped) {
    std::fprintf(stderr,
                 "warning: N/T^2 exceeds 1 for this horizon; "
                 "delta clamped to 0.5\n");
  }

  std::vector<SeedOutcome> outcomes(spec.seeds.size());
  std::atomic<std::size_t> next_job{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;

  auto run_seed = [&](std::size_t idx) {
    const std::uint64_t seed = spec.seeds[idx];
    EnvironmentConfig cfg = spec.environment;
    cfg.seed = seed;
    ParameterSchedule schedule = ParameterSchedule::for_horizon(
        n, k, horizon, spec.estimator_variant);
    schedule.mc_sample_cap = spec.mc_sample_cap;
    PolicyState state(n, k, schedule, seed);

    SeedOutcome outcome;
    outcome.seed = seed;
    outcome.wall_ms_at_checkpoint.resize(checkpoints.size(), 0.0);
    const auto episode_start = Clock::now();
    std::size_t cp = 0;
    const EpisodeResult episode =
        run_episode(cfg, state, [&](const RoundRecord& record) {
          while (cp < checkpoints.size() && record.t == checkpoints[cp]) {
            outcome.wall_ms_at_checkpoint[cp] =
                elapsed_ms(episode_start, Clock::now());
            ++cp;
          }
        });

    const LossMatrixView view = LossMatrixView::of(episode);
    for (std::int64_t c : checkpoints) {
      const std::span<const RoundRecord> prefix(episode.records.data(),
                                                static_cast<std::size_t>(c));
      outcome.regret_at_checkpoint.push_back(
          regret_against_best(prefix, view, k));
    }
    outcome.final_regret = outcome.regret_at_checkpoint.back();
    for (const auto& record : episode.records)
      outcome.final_learner_loss +=
          std::accumulate(record.losses_incurred.begin(),
                          record.losses_incurred.end(), 0.0);

    write_trace_csv(
        spec.output_dir + "/trace_seed" + std::to_string(seed) + ".csv",
        episode.records);
    outcomes[idx] = std::move(outcome);
  };

  auto worker_loop = [&] {
    for (std::size_t idx; (idx = next_job.fetch_add(1)) < spec.seeds.size();) {
      try {
        run_seed(idx);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  int pool_size = workers;
  if (pool_size <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    pool_size = static_cast<int>(std::max(1u, hw));
  }
  pool_size = static_cast<int>(
      std::min<std::size_t>(pool_size, spec.seeds.size()));
  if (pool_size <= 1) {
    worker_loop();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(pool_size);
    for (int i = 0; i < pool_size; ++i) pool.emplace_back(worker_loop);
    for (auto& thread : pool) thread.join();
  }
  if (failure) std::rethrow_exception(failure);

  AggregateReport report;
  report.checkpoints = checkpoints;
  const double m = static_cast<double>(spec.seeds.size());
  ParameterSchedule schedule =
      ParameterSchedule::for_horizon(n, k, horizon, spec.estimator_variant);
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    CheckpointRow row;
    row.t = checkpoints[c];
    for (const auto& outcome : outcomes) {
      row.mean_regret += outcome.regret_at_checkpoint[c];
      row.mean_wall_ms += outcome.wall_ms_at_checkpoint[c];
    }
    row.mean_regret /= m;
    row.mean_wall_ms /= m;
    if (outcomes.size() > 1) {
      double ss = 0.0;
      for (const auto& outcome : outcomes) {
        const double d = outcome.regret_at_checkpoint[c] - row.mean_regret;
        ss += d * d;
      }
      row.stderr_regret = std::sqrt(ss / (m - 1.0)) / std::sqrt(m);
    }
    row.mean_lambda = schedule.lambda_at(row.t, n, k);
    report.rows.push_back(row);
  }
  report.per_seed = std::move(outcomes);
  report.total_wall_ms = elapsed_ms(run_start, Clock::now());

  // aggregate.csv
  {
    const std::string path = spec.output_dir + "/aggregate.csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("IoError", "cannot write '" + path + "'");
    out << "t,mean_regret,stderr,mean_lambda,mean_wall_ms\n";
    std::string line;
    for (const auto& row : report.rows) {
      line.clear();
      line += std::to_string(row.t);
      line += ',';
      append_fixed9(line, row.mean_regret);
      line += ',';
      append_fixed9(line, row.stderr_regret);
      line += ',';
      append_fixed9(line, row.mean_lambda);
      line += ',';
      append_fixed9(line, row.mean_wall_ms);
      line += '\n';
      out << line;
    }
  }

  // summary.json
  {
    ordered_json j;
    j["spec"] = spec_to_json(spec);
    j["checkpoints"] = report.checkpoints;
    ordered_json rows = ordered_json::array();
    for (const auto& row : report.rows) {
      rows.push_back({{"t", row.t},
                      {"mean_regret", row.mean_regret},
                      {"stderr", row.stderr_regret},
                      {"mean_lambda", row.mean_lambda},
                      {"mean_wall_ms", row.mean_wall_ms}});
    }
    j["rows"] = rows;
    ordered_json per_seed = ordered_json::array();
    for (const auto& outcome : report.per_seed) {
      per_seed.push_back({{"seed", outcome.seed},
                          {"final_regret", outcome.final_regret},
                          {"final_learner_loss", outcome.final_learner_loss}});
    }
    j["per_seed"] = per_seed;
    j["total_wall_ms"] = report.total_wall_ms;
    const std::string path = spec.output_dir + "/summary.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("IoError", "cannot write '" + path + "'");
    out << j.dump(2) << '\n';
  }

  return report;
}

SublinearityCheck check_sublinearity(const AggregateReport& report, int n,
                                     int k) {
  if (report.rows.empty())
    throw Error("InvalidArgument", "empty report");
  SublinearityCheck check;
  const std::int64_t horizon = report.checkpoints.back();

  auto nearest_row = [&](std::int64_t target) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
      if (std::llabs(report.rows[i].t - target) <
          std::llabs(report.rows[best].t - target))
        best = i;
    }
    return best;
  };

  std::vector<std::size_t> probes{nearest_row(horizon / 4),
                                  nearest_row(horizon / 2),
                                  report.rows.size() - 1};
  probes.erase(std::unique(probes.begin(), probes.end()), probes.end());

  for (std::size_t p : probes) {
    check.rates.push_back(report.rows[p].mean_regret /
                          static_cast<double>(report.rows[p].t));
  }
  check.ratio_decreasing = true;
  for (std::size_t i = 1; i < check.rates.size(); ++i)
    check.ratio_decreasing &= check.rates[i] < check.rates[i - 1];

  check.final_mean_regret = report.rows.back().mean_regret;
  check.positive_final = check.final_mean_regret > 0.0;
  const double nd = static_cast<double>(n);
  const double td = static_cast<double>(horizon);
  check.ceiling = k * nd * nd * std::sqrt(td * std::log(td));
  check.under_ceiling = check.final_mean_regret <= check.ceiling;
  return check;
}

EstimatorComparisonReport compare_estimators(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.environment.n > kDefaultEnumerationLimit)
    throw Error("ConfigError",
                "compare_estimators requires N <= " +
                    std::to_string(kDefaultEnumerationLimit));
  fs::create_directories(spec.output_dir);

  EnvironmentConfig cfg = spec.environment;
  cfg.seed = spec.seeds.front();
  const Environment env(cfg);
  ParameterSchedule schedule = ParameterSchedule::for_horizon(
      cfg.n, cfg.k, cfg.horizon, spec.estimator_variant);
  schedule.mc_sample_cap = spec.mc_sample_cap;
  PolicyState state(cfg.n, cfg.k, schedule, cfg.seed);
  AvailabilityEstimate mirror(cfg.n);
  SeededRng mc_rng = SeededRng::derive(cfg.seed, /*stream=*/0x636d7072);

  EstimatorComparisonReport report;
  for (std::int64_t t = 1; t <= cfg.horizon; ++t) {
    const RoundData data = env.round(t);
    if (data.available.empty()) {
      mirror.record(data.available);
      state.skip_round(data.available);
      continue;
    }
    const SelectionResult sel = state.select(data.available);
    mirror.record(data.available);

    EstimatorComparisonRow row;
    row.t = t;
    const auto t0 = Clock::now();
    const std::vector<double> exact =
        exact_joint_probability(mirror, state.weights(), cfg.k);
    const auto t1 = Clock::now();
    const std::int64_t samples =
        std::min<std::int64_t>(mirror.rounds(), spec.mc_sample_cap);
    const std::vector<double> approx = monte_carlo_joint_probability(
        mirror, state.weights(), cfg.k, samples, mc_rng);
    const auto t2 = Clock::now();
    row.exact_micros = elapsed_ms(t0, t1) * 1000.0;
    row.mc_micros = elapsed_ms(t1, t2) * 1000.0;
    for (int i = 0; i < cfg.n; ++i)
      row.max_gap = std::max(row.max_gap, std::abs(approx[i] - exact[i]));
    report.rows.push_back(row);

    std::vector<std::pair<ArmIndex, double>> observed;
    for (ArmIndex i : sel.chosen.members)
      observed.emplace_back(i, data.losses[i]);
    state.feedback(LossVector::from_pairs(std::move(observed)));
  }

  const std::string path = spec.output_dir + "/estimator_comparison.csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("IoError", "cannot write '" + path + "'");
  out << "t,max_gap,exact_micros,mc_micros\n";
  std::string line;
  for (const auto& row : report.rows) {
    line.clear();
    line += std::to_string(row.t);
    line += ',';
    append_fixed9(line, row.max_gap);
    line += ',';
    append_fixed9(line, row.exact_micros);
    line += ',';
    append_fixed9(line, row.mc_micros);
    line += '\n';
    out << line;
  }
  return report;
}

namespace {

void k_subsets(const std::vector<ArmIndex>& members, int k,
               std::vector<std::vector<ArmIndex>>& out) {
  std::vector<ArmIndex> current;
  std::function<void(std::size_t)> recurse = [&](std::size_t start) {
    if (static_cast<int>(current.size()) == k) {
      out.push_back(current);
      return;
    }
    for (std::size_t i = start; i < members.size(); ++i) {
      current.push_back(members[i]);
      recurse(i + 1);
      current.pop_back();
    }
  };
  recurse(0);
}

}  // namespace

OracleCheckResult run_oracle_check(std::uint64_t seed, int instances) {
  OracleCheckResult result;
  result.instances = instances;
  SeededRng rng = SeededRng::derive(seed, /*stream=*/0x6f726163);
  const double availability_levels[] = {0.0, 0.35, 0.7, 1.0};

  for (int inst = 0; inst < instances; ++inst) {
    EnvironmentConfig cfg;
    cfg.n = 2 + static_cast<int>(rng.uniform_int(3));  // 2..4
    cfg.k = 1 + static_cast<int>(rng.uniform_int(std::min(cfg.n, 2)));
    cfg.horizon = 5 + static_cast<std::int64_t>(rng.uniform_int(16));
    for (int i = 0; i < cfg.n; ++i)
      cfg.availability.push_back(availability_levels[rng.uniform_int(4)]);
    cfg.loss_generator.kind = LossGeneratorSpec::Kind::kConstantGap;
    for (int i = 0; i < cfg.n; ++i)
      cfg.loss_generator.means.push_back(rng.uniform01());
    cfg.seed = rng.next_u64();

    ParameterSchedule schedule = ParameterSchedule::for_horizon(
        cfg.n, cfg.k, cfg.horizon, EstimatorVariant::kExact);
    PolicyState state(cfg.n, cfg.k, schedule, cfg.seed);
    const EpisodeResult episode = run_episode(cfg, state);
    const LossMatrixView view = LossMatrixView::of(episode);

    // Per distinct set: every candidate action and its summed loss over
    // the rounds where the set occurred. Losses are 0/1 so all sums are
    // exactly representable and order-independent.
    std::map<std::vector<ArmIndex>, std::vector<double>> per_set_arm_sums;
    for (const auto& record : episode.records) {
      if (record.available.empty()) continue;
      const auto& members = record.available.members();
      auto& sums = per_set_arm_sums[members];
      sums.resize(members.size(), 0.0);
      const double* row = view.row(record.t);
      for (std::size_t j = 0; j < members.size(); ++j)
        sums[j] += row[members[j]];
    }

    std::vector<std::vector<double>> candidate_losses;
    for (const auto& [members, sums] : per_set_arm_sums) {
      std::vector<std::vector<ArmIndex>> candidates;
      if (static_cast<int>(members.size()) <= cfg.k) {
        candidates.push_back(members);
      } else {
        k_subsets(members, cfg.k, candidates);
      }
      std::vector<double> losses;
      for (const auto& action : candidates) {
        double total = 0.0;
        for (ArmIndex arm : action) {
          const auto pos = std::find(members.begin(), members.end(), arm);
          total += sums[pos - members.begin()];
        }
        losses.push_back(total);
      }
      candidate_losses.push_back(std::move(losses));
    }

    // Joint exhaustive search over the full product policy space.
    double exhaustive_best = std::numeric_limits<double>::infinity();
    std::function<void(std::size_t, double)> dfs = [&](std::size_t depth,
                                                       double acc) {
      if (depth == candidate_losses.size()) {
        exhaustive_best = std::min(exhaustive_best, acc);
        return;
      }
      for (double loss : candidate_losses[depth]) dfs(depth + 1, acc + loss);
    };
    dfs(0, 0.0);
    if (candidate_losses.empty()) exhaustive_best = 0.0;

    const HindsightPolicy policy =
        best_policy(episode.records, view, cfg.k);
    const double separable_best =
        policy_loss(episode.records, policy, view);

    if (separable_best != exhaustive_best) {
      ++result.failures;
      result.detail += "instance " + std::to_string(inst) +
                       ": separable " + format_fixed9(separable_best) +
                       " != exhaustive " + format_fixed9(exhaustive_best) +
                       "\n";
    }
  }
  return result;
}

}  // namespace sleepx3
