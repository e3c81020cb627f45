#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace seupred {

/// Deterministic random source. Only the raw mt19937_64 output stream is
/// consumed; bounded draws, floats and shuffles are derived here by hand so
/// results are identical across platforms and standard libraries
/// (std::uniform_int_distribution and std::shuffle are not portable).
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), eng_(seed) {}

  uint64_t seed() const { return seed_; }

  uint64_t next_u64() { return eng_(); }

  /// Uniform integer in [0, n). n must be >= 1.
  uint64_t bounded(uint64_t n) {
    // rejection sampling over the top range to avoid modulo bias
    const uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
    uint64_t x = eng_();
    while (x >= limit) x = eng_();
    return x % n;
  }

  int bit() { return static_cast<int>(bounded(2)); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    // Fisher-Yates, fixed order
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::vector<size_t> permutation(size_t n) {
    std::vector<size_t> p(n);
    for (size_t i = 0; i < n; ++i) p[i] = i;
    shuffle(p);
    return p;
  }

  /// Independent child stream; forks with distinct tags never collide in
  /// practice (splitmix64 of seed + tag).
  Rng fork(uint64_t tag) const { return Rng(splitmix64(seed_ + 0x9E3779B97F4A7C15ULL * (tag + 1))); }

  static uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

 private:
  uint64_t seed_;
  std::mt19937_64 eng_;
};

}  // namespace seupred
