#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace jointpred {

// Deterministic RNG used everywhere instead of std distributions, whose output
// is implementation-defined. Same seed, same stream, on any platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(splitmix(seed)), seed_mix_(splitmix(seed ^ 0xa5a5a5a5a5a5a5a5ull)) {}

  uint64_t next_u64() { return gen_(); }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int64_t uniform_int(int64_t lo, int64_t hi) {  // inclusive bounds
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int64_t>(gen_() % span);
  }

  // standard normal via Box-Muller
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Derives an independent stream, e.g. one per scene, so parallel evaluation
  // stays deterministic regardless of scheduling.
  Rng fork(uint64_t salt) const {
    return Rng(seed_mix_ ^ splitmix(salt));
  }

 private:
  static uint64_t splitmix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::mt19937_64 gen_;
  uint64_t seed_mix_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace jointpred
