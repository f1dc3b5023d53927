#pragma once

#include <array>
#include <cstdint>

namespace sleepx3 {

// Deterministic small-state generator (xoshiro256++, seeded via splitmix64).
// The contract is cross-platform reproducibility: the same seed and the same
// call sequence produce bit-identical outputs everywhere. Single-owner
// mutable; move between threads, never share.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 random bits.
  double uniform01();

  // True with probability p; p=0 never, p=1 always.
  bool bernoulli(double p);

  // Unbiased draw from {0, ..., n-1}, n >= 1.
  std::uint64_t uniform_int(std::uint64_t n);

  // Independent stream derived deterministically from (seed, stream, index).
  // Used to split availability/loss randomness and per-round generators.
  static SeededRng derive(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t index = 0);

  std::array<std::uint64_t, 4> state() const noexcept { return state_; }

  static SeededRng from_state(std::uint64_t seed,
                              const std::array<std::uint64_t, 4>& state) {
    SeededRng r(seed);
    r.state_ = state;
    return r;
  }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_;
};

}  // namespace sleepx3
