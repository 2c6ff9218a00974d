#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace bildrl {

// Deterministic RNG used everywhere randomness is needed.
//
// std::uniform_*_distribution is implementation-defined, so all mappings from
// raw mt19937_64 output to uniforms, bounded ints, and shuffles are done by
// hand here. Identical seeds therefore produce identical streams on any
// conforming standard library, which the reproducibility contract
// (same seed -> bit-identical checkpoint) depends on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed), seed_(seed) {}

  std::uint64_t next() { return gen_(); }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), unbiased via rejection. Requires n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
  }

  int uniform_int(int n) { return static_cast<int>(below(static_cast<std::uint64_t>(n))); }

  // Fisher–Yates, fixed iteration order.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

  // Independent child stream derived from the construction seed via
  // splitmix64, so each worker / data stream gets its own generator as a pure
  // function of (run seed, stream id).
  Rng fork(std::uint64_t stream) const { return Rng(mix(seed_, stream)); }

  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 gen_;
  std::uint64_t seed_;
};

}  // namespace bildrl
