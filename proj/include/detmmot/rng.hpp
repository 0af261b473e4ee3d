#pragma once

#include <cmath>
#include <cstdint>

namespace detmmot {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Explicit, splittable random stream (xoshiro256++ core, splitmix64 seeding).
// All randomness in the library flows through Rng instances passed by the
// caller; there is no global state. split() derives an independent child
// stream without advancing the parent's draw sequence, so interleaving
// auxiliary draws (e.g. mixture signs) cannot shift the main sample path.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = detail::splitmix64(s);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result =
        detail::rotl64(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl64(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the partner value is cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.283185307179586476925286766559 * u2;
    cached_ = mag * std::sin(ang);
    has_cached_ = true;
    return mag * std::cos(ang);
  }

  Rng split() {
    std::uint64_t mix = state_[0] ^ detail::rotl64(state_[2], 17) ^
                        (0xA3EC647659359ACDULL * ++split_counter_);
    return Rng(detail::splitmix64(mix));
  }

 private:
  std::uint64_t state_[4];
  std::uint64_t split_counter_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace detmmot
