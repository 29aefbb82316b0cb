#pragma once
#include <cstdint>

namespace bethe {

// SplitMix64: counter-based 64-bit generator. Chosen as the project-wide seeded
// PRNG so generated corpora are reproducible across implementations from the
// documented algorithm alone.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n). Modulo bias is negligible for n << 2^64 and the
  // simple form is easy to reproduce in other languages.
  uint64_t below(uint64_t n) { return next() % n; }

  bool coin() { return (next() & 1ULL) != 0; }

 private:
  uint64_t state_;
};

}  // namespace bethe
