#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace siamte {

/// Deterministic RNG wrapper. Distribution mappings are written out explicitly
/// instead of using std:: distributions, so that a (seed, call sequence) pair
/// produces identical streams on any standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), n > 0. Modulo bias is irrelevant at these sizes.
  int uniform_int(int n) { return int(eng_() % uint64_t(n)); }

  /// Standard normal via Box-Muller (one value per draw, cache discarded).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Derive an independent stream; mixing follows splitmix64.
  static uint64_t derive(uint64_t seed, uint64_t stream) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 eng_;
};

/// Partial Fisher-Yates: k distinct indices drawn uniformly from [0, n).
inline std::vector<int> sample_distinct(Rng& rng, int n, int k) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = 0; i < k; ++i) {
    int j = i + rng.uniform_int(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace siamte
