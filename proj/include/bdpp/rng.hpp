#pragma once

#include <cstdint>

namespace bdpp {

// Deterministic per-stream random generator: xoshiro256++ seeded through
// splitmix64 from a (seed, stream) pair.  Distinct streams are statistically
// independent, and stream i's output never depends on how many draws other
// streams made, so Monte Carlo results are reproducible under any thread
// schedule as long as sample i always uses stream i.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t sm = seed ^ (0xa0761d6478bd642fULL * (stream + 1));
    for (auto& w : s_) w = splitmix64(sm);
    // A zero state would be a fixed point; splitmix64 output of any seed is
    // zero on all four words with probability 2^-256, but guard anyway.
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[3] = 1;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform double in [0,1), 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

} // namespace bdpp
