#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>

namespace sllda {

// splitmix64 finalizer; used only to derive independent seed streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Stream-splitting rules, fixed so that runs are reproducible everywhere:
//   - Markov chain c of a training run uses engine seed  base_seed ^ c.
//   - test document d of a prediction run uses
//     derive_stream(base_seed ^ chain, d + 1), so documents can be sampled
//     concurrently in any order while producing identical output.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream));
}

// Deterministic generator wrapper around std::mt19937_64.  All variates are
// produced by our own code (not std::*_distribution) so sequences are
// identical across standard libraries.  Size-one supports are resolved
// without consuming a variate; this makes degenerate sampling steps exact
// no-ops on the stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Unbiased integer in [0, n); n == 1 consumes nothing.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % n;
    for (;;) {
      const std::uint64_t x = gen_();
      if (x < limit) return x % n;
    }
  }

  // Draw an index from cumulative (inclusive prefix-sum) weights.
  // The caller guarantees cumulative.back() > 0 and size >= 1.
  std::size_t categorical_from_cumulative(std::span<const double> cumulative) {
    const std::size_t n = cumulative.size();
    if (n == 1) return 0;
    const double u = uniform01() * cumulative[n - 1];
    std::size_t lo = 0, hi = n - 1;
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (u < cumulative[mid]) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    return lo;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace sllda
