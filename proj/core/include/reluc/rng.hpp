// Deterministic random number generation with pinned bit-level mappings, so
// that every sampler in the project is reproducible across platforms and
// standard-library versions.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace reluc {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0,1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0,1]; used where log() must stay finite.
  double uniform01_open() {
    return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller without caching: two fresh uniforms per draw, so the stream
  // position is a fixed function of the number of calls.
  double normal() {
    const double u1 = uniform01_open();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Centered Laplace via inverse CDF; variance = 2*scale^2.
  double laplace(double scale) {
    const double u = uniform01() - 0.5;
    const double s = (u < 0.0) ? -1.0 : 1.0;
    return -scale * s * std::log(1.0 - 2.0 * std::abs(u));
  }

  // Integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return gen_() % n; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace reluc
