#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace fracbayes {

// SplitMix64 finalizer; full avalanche on 64 bits.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Counter-based generator: the i-th output is a pure function of (key, i),
// so independent streams can be forked for parallel Monte-Carlo loops and
// replicate grids without any shared state. Replays are bit-identical.
class Rng {
 public:
  explicit Rng(std::uint64_t key, std::uint64_t stream = 0)
      : key_(mix64(key ^ mix64(stream + 0x9E3779B97F4A7C15ull))) {}

  // Child generator with an independent output sequence.
  Rng fork(std::uint64_t stream) const { return Rng(key_, stream + 1); }

  std::uint64_t next_u64() {
    ctr_ += 0x9E3779B97F4A7C15ull;
    return mix64(key_ ^ ctr_);
  }

  // Uniform on the open interval (0,1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the paired value is cached.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  // Gamma(shape, rate 1), Marsaglia-Tsang squeeze; shape < 1 via the
  // boost trick G(a) = G(a+1) * U^{1/a}.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be > 0");
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // Inverse-Gamma(shape, rate): 1/Gamma(shape, rate).
  double inv_gamma(double shape, double rate) { return rate / gamma(shape); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace fracbayes
