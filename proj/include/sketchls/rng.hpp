#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sketchls {

/// Seeded random stream used everywhere randomness is needed.
///
/// The generator is pinned so that regeneration from a seed is reproducible:
/// std::mt19937_64 (whose output sequence is fixed by the C++ standard) drives
/// a 53-bit uniform mapping, and normals come from Box-Muller on those
/// uniforms (two variates per uniform pair, cosine variate first). Independent
/// streams are obtained by using distinct seeds.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal variate.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    if (u1 == 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = kTwoPi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  /// +1 or -1 with equal probability (one engine draw per sign).
  double sign() { return (engine_() & 1ull) ? 1.0 : -1.0; }

 private:
  static constexpr double kTwoPi = 6.283185307179586476925286766559;
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sketchls
