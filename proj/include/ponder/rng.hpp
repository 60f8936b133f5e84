#pragma once

#include <cstdint>

namespace ponder {

// Seeded generator with self-contained distribution helpers. The standard
// library's distributions are implementation-defined, so sampling goes
// through these instead; a given (seed, draw sequence) produces the same
// stream on every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {
    // Warm up so that small seeds do not start in a low-entropy state.
    next_u64();
    next_u64();
  }

  // Independent stream derived from (seed, stream id).
  static Rng derive(uint64_t seed, uint64_t stream) {
    return Rng(mix(seed + 0x9e3779b97f4a7c15ull * (stream + 1)));
  }

  // splitmix64 step.
  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi) {
    const uint64_t range = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(bounded(range));
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  static uint64_t mix(uint64_t x) {
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  // Lemire's multiply-shift; bias is below 2^-53 for the small ranges used.
  uint64_t bounded(uint64_t range) {
    const unsigned __int128 m =
        static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(range);
    return static_cast<uint64_t>(m >> 64);
  }

  uint64_t state_;
};

}  // namespace ponder
