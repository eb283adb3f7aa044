#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace nnkit {

// Seedable deterministic PRNG: std::mt19937_64 (fully specified by the C++
// standard) with hand-rolled uniform/normal mappings, so the stream for a
// given seed is identical on every platform. std::*_distribution is
// deliberately avoided (its output is implementation-defined).
//
// derive(stream) mixes the base seed with a stream id through splitmix64 and
// returns an independent generator; layers draw their init values from
// per-layer substreams so adding a layer does not perturb the others.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the paired draw is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    // Guard against log(0); pushes u1 into (0, 1].
    u1 = 1.0 - u1;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  Rng derive(std::uint64_t stream) const { return Rng(splitmix64(seed_ ^ (stream * 0x9E3779B97F4A7C15ULL + 0x2545F4914F6CDD1DULL))); }

  std::uint64_t seed() const { return seed_; }

  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace nnkit
