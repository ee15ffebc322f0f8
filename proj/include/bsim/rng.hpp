#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace bsim {

// Seeded random stream with samplers implemented in-repo so that results are
// reproducible bit-for-bit for a given seed, independent of the standard
// library's distribution internals.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(mix(seed)) {}

  // Independent stream derived from (seed, stream_id), e.g. one per replicate.
  static RngStream substream(std::uint64_t seed, std::uint64_t stream_id) {
    return RngStream(mix(seed) ^ mix(0x9e3779b97f4a7c15ULL + stream_id));
  }

  // Uniform draw in the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; exactly two uniforms per draw.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace bsim
