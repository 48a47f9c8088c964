#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace nhrm {

/// Version tag of the random stream layout. Bump when the derivation of
/// sub-seeds or the variate transforms change, since stored reports depend on
/// it.
inline constexpr const char* kRngVersion = "nhrm-rng-1 (mt19937_64, splitmix64 sub-seeding)";

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Sub-seed for stream `index` in `domain` under master seed `seed`. Distinct
/// (seed, domain, index) triples give statistically independent streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t domain, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(seed) ^ domain) ^ index);
}

/// Stream domains, so that sample i of the matrix ensemble never shares a
/// stream with, e.g., the initial vectors of sample i.
enum class Stream : std::uint64_t {
  matrix = 0x11,
  wigner = 0x22,
  profile = 0x33,
  initial_vectors = 0x44,
  noise = 0x55,
};

/// mt19937_64 with platform-independent variate transforms (the standard
/// distributions are implementation-defined, which would break bitwise
/// reproducibility across toolchains).
class Rng {
public:
  Rng(std::uint64_t seed, Stream domain, std::uint64_t index)
      : engine_(derive_seed(seed, static_cast<std::uint64_t>(domain), index)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }

  /// Standard normal by Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_open0()));
    const double phi = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

  std::uint64_t bits() { return engine_(); }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace nhrm
