#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace pollerr {

// splitmix64 finalizer; stable across platforms.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed-splitting rule: every independent stream (chain, sweep cell,
// simulation replication) gets splitmix64 applied to the root seed with
// the stream coordinates mixed in. Streams are reproducible in isolation
// given (root, a, b, c).
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = splitmix64(root ^ 0x6A09E667F3BCC909ULL);
  s = splitmix64(s ^ splitmix64(a));
  s = splitmix64(s ^ splitmix64(b ^ 0x3C6EF372FE94F82BULL));
  s = splitmix64(s ^ splitmix64(c ^ 0xA54FF53A5F1D36F1ULL));
  return s;
}

// mt19937_64 stream with explicit uniform/normal draws. Normal variates
// use Box-Muller on two uniforms per call (no cached spare), so the
// draw sequence is a pure function of the engine state.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; safe under log().
  double uniform_pos() { return 1.0 - uniform(); }

  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pollerr
