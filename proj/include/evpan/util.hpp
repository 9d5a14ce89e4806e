#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

namespace evpan {

// Deterministic splitmix64 generator. We avoid <random> distributions so
// that identical seeds produce identical streams on every standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0,n), n >= 1
  uint64_t uniform_int(uint64_t n) { return next() % n; }

  // standard normal via Box-Muller
  double gaussian() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double mag = std::sqrt(-2.0 * std::log(u1));
    double ang = 2.0 * std::numbers::pi * u2;
    cached_ = mag * std::sin(ang);
    have_cached_ = true;
    return mag * std::cos(ang);
  }

  // per-stream seed derivation (scene i of run seed s, etc.)
  static uint64_t derive(uint64_t seed, uint64_t stream) {
    Rng r(seed ^ (0x2545f4914f6cdd1dULL * (stream + 1)));
    return r.next();
  }

 private:
  uint64_t state_ = 0;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

// Pairwise (cascade) summation: deterministic for a given length and
// noticeably more accurate than sequential accumulation on long vectors.
double pairwise_sum(std::span<const double> v);

// Row-major n x k matrix of doubles.
struct Mat {
  size_t n = 0;
  int k = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(size_t n_, int k_) : n(n_), k(k_), v(n_ * static_cast<size_t>(k_), 0.0) {}

  double* row(size_t i) { return v.data() + i * static_cast<size_t>(k); }
  const double* row(size_t i) const { return v.data() + i * static_cast<size_t>(k); }
  double& at(size_t i, int c) { return v[i * static_cast<size_t>(k) + static_cast<size_t>(c)]; }
  double at(size_t i, int c) const { return v[i * static_cast<size_t>(k) + static_cast<size_t>(c)]; }
};

// wrap an angle into [0, 2*pi)
inline double wrap_two_pi(double t) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  t = std::fmod(t, two_pi);
  if (t < 0.0) t += two_pi;
  if (t >= two_pi) t = 0.0;
  return t;
}

// signed circular difference a-b in index units, result in [-period/2, period/2)
inline double wrap_signed(double d, double period) {
  d = std::fmod(d, period);
  if (d < -period / 2.0) d += period;
  if (d >= period / 2.0) d -= period;
  return d;
}

}  // namespace evpan
