#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ratesync {

// Deterministic random stream. The engine is std::mt19937_64; the
// uniform/exponential transforms are written out explicitly because the
// standard distribution classes are implementation-defined, which would make
// recorded traces differ across standard libraries for the same seed.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  // One stream per trial: derive independent child seeds from a root seed.
  static RandomStream split(std::uint64_t root_seed, std::uint64_t stream_index) {
    return RandomStream(mix(root_seed + 0x9e3779b97f4a7c15ULL * (stream_index + 1)));
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Inverse-CDF exponential draw with the given mean.
  double exponential(double mean) {
    return -mean * std::log1p(-uniform01());
  }

  std::uint64_t next_u64() { return engine_(); }

  // splitmix64 finalizer; decorrelates sequential seeds.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ratesync
