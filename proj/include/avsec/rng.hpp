#pragma once

#include <cmath>
#include <cstdint>

namespace avsec {

/// Deterministic splitmix64 stream. Used everywhere instead of <random>
/// distributions so outputs are identical across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  /// Derive an independent stream from (seed, salt...) without correlation.
  static Rng derive(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    Rng r(seed);
    r.state_ ^= 0x9e3779b97f4a7c15ULL * (a + 1);
    r.next_u64();
    r.state_ ^= 0xbf58476d1ce4e5b9ULL * (b + 1);
    r.next_u64();
    r.state_ ^= 0x94d049bb133111ebULL * (c + 1);
    r.next_u64();
    return r;
  }

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in (0, 1]; never returns 0 so log() below is safe.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (pair cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  /// Poisson by inversion; fine for the small lambdas used here.
  int poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    const double l = std::exp(-lambda);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > l);
    return k - 1;
  }

  /// Bernoulli(p).
  bool chance(double p) { return uniform() <= p; }

 private:
  uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace avsec
