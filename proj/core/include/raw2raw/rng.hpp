#pragma once

#include <cstdint>

namespace raw2raw {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Tiny counter-derived generator. Each instance is seeded independently
/// (e.g. from (seed, pixel index)), so draws are scheduling-independent.
class SplitMixEngine {
 public:
  using result_type = uint64_t;
  explicit SplitMixEngine(uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~0ULL; }
  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  uint64_t state_;
};

/// Derive a stream key from a seed and arbitrary lane indices.
inline uint64_t derive_stream(uint64_t seed, uint64_t a, uint64_t b = 0) {
  return splitmix64(splitmix64(seed ^ 0x2545f4914f6cdd1dULL) ^ splitmix64(a) ^
                    splitmix64(b * 0x100000001b3ULL + 0xcbf29ce484222325ULL));
}

}  // namespace raw2raw
