#pragma once
#include <cmath>
#include <cstdint>
#include <random>

namespace lfgp {

// Deterministic RNG: mt19937_64 plus hand-rolled transforms so that every
// draw is bit-identical for a given seed regardless of platform stdlib.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t raw() { return gen_(); }

  // Uniform in [0,1), 53-bit mantissa.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0,n) without modulo bias.
  int uniform_int(int n) {
    const uint64_t un = static_cast<uint64_t>(n);
    const uint64_t bound = UINT64_MAX - UINT64_MAX % un;
    uint64_t x;
    do {
      x = gen_();
    } while (x >= bound);
    return static_cast<int>(x % un);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Standard normal via Box-Muller; second draw cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // (0,1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
  }

  // Derive an independent stream (e.g. one per worker or per seed index).
  Rng fork(uint64_t stream) {
    std::mt19937_64 mix(gen_() ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    return Rng(mix());
  }

 private:
  explicit Rng(std::mt19937_64 gen) : gen_(gen) {}
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace lfgp
