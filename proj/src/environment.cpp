#include "sleepx3/environment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "sleepx3/errors.hpp"
#include "sleepx3/format.hpp"

namespace sleepx3 {

namespace {
constexpr std::uint64_t kAvailabilityStream = 0x61766169;  // "avai"
constexpr std::uint64_t kLossStream = 0x6c6f7373;          // "loss"

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream ss(line);
  while (std::getline(ss, item, sep)) parts.push_back(item);
  if (!line.empty() && line.back() == sep) parts.emplace_back();
  return parts;
}
}  // namespace

std::string to_string(LossGeneratorSpec::Kind kind) {
  switch (kind) {
    case LossGeneratorSpec::Kind::kConstantGap: return "constant-gap";
    case LossGeneratorSpec::Kind::kPeriodicSwap: return "periodic-swap";
    case LossGeneratorSpec::Kind::kDrifting: return "drifting";
    case LossGeneratorSpec::Kind::kReplayFile: return "replay-file";
  }
  throw Error("InvalidArgument", "bad loss generator kind");
}

LossGeneratorSpec::Kind loss_kind_from_string(const std::string& s) {
  if (s == "constant-gap") return LossGeneratorSpec::Kind::kConstantGap;
  if (s == "periodic-swap") return LossGeneratorSpec::Kind::kPeriodicSwap;
  if (s == "drifting") return LossGeneratorSpec::Kind::kDrifting;
  if (s == "replay-file") return LossGeneratorSpec::Kind::kReplayFile;
  throw Error("ConfigError", "unknown loss generator kind '" + s + "'");
}

std::vector<double> evenly_spaced_means(int n, double low, double high) {
  std::vector<double> means(n, low);
  for (int i = 1; i < n; ++i)
    means[i] = low + (high - low) * static_cast<double>(i) /
                         static_cast<double>(n - 1);
  return means;
}

void EnvironmentConfig::validate() const {
  if (n < 1) throw Error("ConfigError", "environment.N must be >= 1");
  if (k < 1 || k > n)
    throw Error("ConfigError", "environment.k must satisfy 1 <= k <= N");
  if (horizon < 1) throw Error("ConfigError", "environment.T must be >= 1");
  if (static_cast<int>(availability.size()) != n)
    throw Error("ConfigError", "environment.availability must have N entries");
  for (double a : availability) {
    if (!(a >= 0.0 && a <= 1.0))
      throw Error("ConfigError",
                  "environment.availability entries must lie in [0,1]");
  }
  using Kind = LossGeneratorSpec::Kind;
  const auto& lg = loss_generator;
  switch (lg.kind) {
    case Kind::kConstantGap:
    case Kind::kPeriodicSwap:
      if (static_cast<int>(lg.means.size()) != n)
        throw Error("ConfigError",
                    "environment.loss_generator.means must have N entries");
      for (double m : lg.means) {
        if (!(m >= 0.0 && m <= 1.0))
          throw Error("ConfigError",
                      "environment.loss_generator.means must lie in [0,1]");
      }
      if (lg.kind == Kind::kPeriodicSwap && lg.period < 1)
        throw Error("ConfigError",
                    "environment.loss_generator.period must be >= 1");
      break;
    case Kind::kDrifting:
      if (lg.period < 1)
        throw Error("ConfigError",
                    "environment.loss_generator.period must be >= 1");
      if (!(lg.amplitude >= 0.0 && lg.amplitude <= 0.5))
        throw Error("ConfigError",
                    "environment.loss_generator.amplitude must lie in [0,0.5]");
      break;
    case Kind::kReplayFile:
      if (lg.path.empty())
        throw Error("ConfigError",
                    "environment.loss_generator.path must be set");
      break;
  }
}

Environment::Environment(EnvironmentConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (cfg_.loss_generator.kind == LossGeneratorSpec::Kind::kReplayFile) {
    const auto rounds = read_trace_file(cfg_.loss_generator.path, cfg_.n);
    replay_available_.reserve(rounds.size());
    replay_losses_.reserve(rounds.size());
    for (const auto& r : rounds) {
      replay_available_.push_back(r.available);
      replay_losses_.push_back(r.losses);
    }
  }
}

std::vector<double> Environment::losses_at(std::int64_t t) const {
  using Kind = LossGeneratorSpec::Kind;
  const auto& lg = cfg_.loss_generator;
  switch (lg.kind) {
    case Kind::kConstantGap: {
      SeededRng rng = SeededRng::derive(cfg_.seed, kLossStream,
                                        static_cast<std::uint64_t>(t));
      std::vector<double> losses(cfg_.n, 0.0);
      for (int i = 0; i < cfg_.n; ++i)
        losses[i] = rng.bernoulli(lg.means[i]) ? 1.0 : 0.0;
      return losses;
    }
    case Kind::kPeriodicSwap: {
      SeededRng rng = SeededRng::derive(cfg_.seed, kLossStream,
                                        static_cast<std::uint64_t>(t));
      // The mean order flips at t = P, 2P, ...
      const bool swapped = (t / lg.period) % 2 == 1;
      std::vector<double> losses(cfg_.n, 0.0);
      for (int i = 0; i < cfg_.n; ++i) {
        const double mean = swapped ? lg.means[cfg_.n - 1 - i] : lg.means[i];
        losses[i] = rng.bernoulli(mean) ? 1.0 : 0.0;
      }
      return losses;
    }
    case Kind::kDrifting: {
      std::vector<double> losses(cfg_.n, 0.0);
      // t mod period keeps the cycle bit-exact across periods.
      const double cycle = static_cast<double>(t % lg.period) /
                           static_cast<double>(lg.period);
      for (int i = 0; i < cfg_.n; ++i) {
        const double phase =
            cycle + static_cast<double>(i) / static_cast<double>(cfg_.n);
        const double v =
            0.5 + lg.amplitude * std::sin(2.0 * std::numbers::pi * phase);
        losses[i] = std::clamp(v, 0.0, 1.0);
      }
      return losses;
    }
    case Kind::kReplayFile: {
      if (t > static_cast<std::int64_t>(replay_losses_.size()))
        throw Error("TraceTooShort",
                    "replay trace has " +
                        std::to_string(replay_losses_.size()) +
                        " rounds, need round " + std::to_string(t));
      return replay_losses_[t - 1];
    }
  }
  throw Error("InvalidArgument", "bad loss generator kind");
}

RoundData Environment::round(std::int64_t t) const {
  if (t < 1 || t > cfg_.horizon)
    throw Error("InvalidArgument",
                "round " + std::to_string(t) + " outside [1, T]");
  RoundData data;
  if (cfg_.loss_generator.kind == LossGeneratorSpec::Kind::kReplayFile) {
    if (t > static_cast<std::int64_t>(replay_available_.size()))
      throw Error("TraceTooShort",
                  "replay trace has " +
                      std::to_string(replay_available_.size()) +
                      " rounds, need round " + std::to_string(t));
    data.available = replay_available_[t - 1];
  } else {
    SeededRng rng = SeededRng::derive(cfg_.seed, kAvailabilityStream,
                                      static_cast<std::uint64_t>(t));
    data.available = sample_bernoulli_set(cfg_.availability, rng);
  }
  data.losses = losses_at(t);
  return data;
}

detail::TempFile::~TempFile() {
  std::error_code ec;
  std::filesystem::remove(path, ec);
}

EpisodeResult run_episode(
    const EnvironmentConfig& cfg, PolicyState& state,
    const std::function<void(const RoundRecord&)>& on_round,
    std::int64_t retention_limit) {
  if (state.arms() != cfg.n || state.plays() != cfg.k)
    throw Error("ConfigError",
                "policy state and environment disagree on N or k");
  const Environment env(cfg);

  EpisodeResult result;
  result.n = cfg.n;
  result.records.reserve(cfg.horizon);
  result.losses_retained =
      static_cast<std::int64_t>(cfg.n) * cfg.horizon <= retention_limit;
  std::ofstream spill_out;
  if (result.losses_retained) {
    result.loss_matrix.reserve(static_cast<std::size_t>(cfg.n) * cfg.horizon);
  } else {
    const auto path = std::filesystem::temp_directory_path() /
                      ("sleepx3_losses_" + std::to_string(cfg.seed) + "_" +
                       std::to_string(reinterpret_cast<std::uintptr_t>(&result)) +
                       ".bin");
    spill_out.open(path, std::ios::binary | std::ios::trunc);
    if (!spill_out)
      throw Error("IoError", "cannot write spill file " + path.string());
    result.spill = std::make_shared<detail::TempFile>(path.string());
  }

  for (std::int64_t t = 1; t <= cfg.horizon; ++t) {
    const RoundData data = env.round(t);
    RoundRecord record;
    record.t = t;
    record.available = data.available;
    record.lambda = state.current_lambda();

    if (data.available.empty()) {
      record.degenerate = true;
      state.skip_round(data.available);
    } else {
      const SelectionResult sel = state.select(data.available);
      record.chosen = sel.chosen.members;
      record.degenerate = sel.degenerate;
      std::vector<std::pair<ArmIndex, double>> observed;
      observed.reserve(record.chosen.size());
      for (ArmIndex i : record.chosen) {
        record.losses_incurred.push_back(data.losses[i]);
        observed.emplace_back(i, data.losses[i]);
      }
      state.feedback(LossVector::from_pairs(std::move(observed)));
    }

    if (result.losses_retained) {
      result.loss_matrix.insert(result.loss_matrix.end(), data.losses.begin(),
                                data.losses.end());
    } else {
      spill_out.write(reinterpret_cast<const char*>(data.losses.data()),
                      static_cast<std::streamsize>(cfg.n * sizeof(double)));
    }
    if (on_round) on_round(record);
    result.records.push_back(std::move(record));
  }
  if (!result.losses_retained) {
    spill_out.close();
    if (!spill_out) throw Error("IoError", "spill file write failed");
  }
  return result;
}

void write_trace_file(const std::string& path,
                      const std::vector<RoundData>& rounds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("IoError", "cannot write '" + path + "'");
  std::string line;
  for (std::size_t idx = 0; idx < rounds.size(); ++idx) {
    line.clear();
    line += std::to_string(idx + 1);
    line += ';';
    const auto& members = rounds[idx].available.members();
    for (std::size_t j = 0; j < members.size(); ++j) {
      if (j > 0) line += ',';
      line += std::to_string(members[j]);
    }
    line += ';';
    for (std::size_t j = 0; j < rounds[idx].losses.size(); ++j) {
      if (j > 0) line += ',';
      append_fixed9(line, rounds[idx].losses[j]);
    }
    line += '\n';
    out << line;
  }
}

std::vector<RoundData> read_trace_file(const std::string& path, int n) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IoError", "cannot read '" + path + "'");
  std::vector<RoundData> rounds;
  std::string line;
  std::int64_t expected_t = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line, ';');
    if (fields.size() != 3)
      throw Error("ParseError", "trace line needs 3 ';'-fields: " + line);
    if (parse_int_strict(fields[0]) != expected_t)
      throw Error("ParseError", "trace rounds must be consecutive from 1");

    RoundData data;
    std::vector<ArmIndex> members;
    if (!fields[1].empty()) {
      for (const auto& item : split(fields[1], ','))
        members.push_back(static_cast<ArmIndex>(parse_int_strict(item)));
    }
    data.available = AvailabilitySet::from_arms(std::move(members), n);

    const auto loss_items = split(fields[2], ',');
    if (static_cast<int>(loss_items.size()) != n)
      throw Error("ParseError", "trace line needs N loss values: " + line);
    for (const auto& item : loss_items) {
      const double v = parse_double_strict(item);
      if (!(v >= 0.0 && v <= 1.0))
        throw Error("LossOutOfRange", "trace loss " + item);
      data.losses.push_back(v);
    }
    rounds.push_back(std::move(data));
    ++expected_t;
  }
  return rounds;
}

}  // namespace sleepx3
