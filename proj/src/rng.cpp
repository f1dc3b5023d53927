#include "sleepx3/rng.hpp"

#include "sleepx3/errors.hpp"

namespace sleepx3 {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t v, int k) {
  return (v << k) | (v >> (64 - k));
}

}  // namespace

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t x = seed;
  for (auto& word : state_) word = splitmix64(x);
  // xoshiro must not start from the all-zero state.
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
}

std::uint64_t SeededRng::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double SeededRng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

bool SeededRng::bernoulli(double p) { return uniform01() < p; }

std::uint64_t SeededRng::uniform_int(std::uint64_t n) {
  if (n == 0) throw Error("InvalidArgument", "uniform_int requires n >= 1");
  const std::uint64_t limit = n * (~std::uint64_t{0} / n);
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

SeededRng SeededRng::derive(std::uint64_t seed, std::uint64_t stream,
                            std::uint64_t index) {
  std::uint64_t x = seed;
  std::uint64_t h = splitmix64(x);
  x ^= stream * 0xD1B54A32D192ED03ULL;
  h ^= splitmix64(x);
  x ^= index * 0x8CB92BA72F3D8DD7ULL;
  h ^= splitmix64(x);
  return SeededRng(h);
}

}  // namespace sleepx3
