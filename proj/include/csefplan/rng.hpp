#pragma once

// Seeded random number helpers. Every stochastic component in the library
// draws from an explicitly seeded stream so that suite outputs are
// reproducible independent of scheduling and worker count.

#include <cstdint>

namespace csefplan {

/// splitmix64; used both as a generator and to derive independent
/// per-case seeds from a base seed.
struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed = 0) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
};

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  SplitMix64 g(base ^ (0x9e3779b97f4a7c15ull * (stream + 1)));
  g.next();
  return g.next();
}

/// Small deterministic RNG with a pinned output mapping (no reliance on
/// library distribution internals).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(gen_.next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) { return gen_.next() % n; }

 private:
  SplitMix64 gen_;
};

}  // namespace csefplan
