#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

// All randomness in this project flows through the two generators below so
// that every experiment is reproducible from its seed, independent of the
// standard library implementation.

namespace dub {

// SplitMix64 (Steele/Lea/Flood constants). Used to expand seeds and to derive
// independent per-item seeds.
struct SplitMix64 {
  uint64_t state;

  explicit SplitMix64(uint64_t seed) : state(seed) {}

  uint64_t next() {
    uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
};

// xoshiro256++ (Blackman & Vigna 2019), state filled from SplitMix64.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& w : state_) w = sm.next();
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0,1) with 53-bit resolution.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0,n). Modulo bias is irrelevant at the n used here.
  int uniform_int(int n) { return int(next_u64() % uint64_t(n)); }

  // Standard normal, Box-Muller, one value per two uniforms.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t state_[4];
};

// index-th element of the SplitMix64 stream seeded with master. The simulator
// derives one child seed per generated image this way and records it in the
// manifest.
inline uint64_t derive_seed(uint64_t master, uint64_t index) {
  SplitMix64 sm(master);
  uint64_t s = 0;
  for (uint64_t i = 0; i <= index; ++i) s = sm.next();
  return s;
}

}  // namespace dub
