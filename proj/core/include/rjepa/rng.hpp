#pragma once

#include <cmath>
#include <cstdint>

namespace rjepa {

// SplitMix64. Counter-based: the state advances by a fixed odd gamma and each
// output is the Stafford mix13 scramble of the counter, so equal seeds give
// identical streams on every platform and there is no warm-up.
//
// Gaussian variates come from Box-Muller on the uniform stream (second value
// of each pair cached), so they inherit the same determinism.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return scramble(state_);
  }

  // [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0,1] keeps the log finite
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Seed-splitting rule for independent substreams (parallel sequence
  // generation, MC chains): child = mix(seed ^ mix(id + 1)).
  static std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t id) {
    return scramble(seed ^ scramble(id + 1));
  }

 private:
  static std::uint64_t scramble(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rjepa
