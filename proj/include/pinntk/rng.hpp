#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace pinntk {

/// Deterministic random stream built on SplitMix64.
///
/// Every consumer of randomness (weight init, sample draws, seed sweeps)
/// derives its own stream from a user seed plus a textual label, so adding
/// a new consumer never perturbs the draws of an existing one.  Normal
/// variates come from a Box-Muller transform over the raw 64-bit output,
/// which keeps results bit-identical across platforms and standard
/// libraries.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view label)
      : state_(mix(seed ^ fnv1a(label))) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  /// Uniform draw in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; generates two variates per transform
  /// and hands out the cached one on the next call.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * pi_ * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    return h;
  }

  static constexpr double pi_ = 3.14159265358979323846;

  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pinntk
