#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace tailgarch {

namespace detail {

/// splitmix64 finalizer; used for seeding and stream derivation.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

} // namespace detail

/// Seed for stream `stream` derived from a master seed; used wherever an
/// API takes a seed value rather than a generator (simulation, fits).
inline std::uint64_t child_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t sm = seed;
  const std::uint64_t a = detail::splitmix64_next(sm);
  sm = stream + 0x632BE59BD9B4E019ull;
  const std::uint64_t b = detail::splitmix64_next(sm);
  return a ^ detail::rotl64(b, 17);
}

/// Deterministic, seedable generator (xoshiro256++) with explicit stream
/// derivation so replications get independent, platform-stable sequences.
/// Normal draws use Box-Muller rather than std::normal_distribution to keep
/// output identical across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = detail::splitmix64_next(sm);
  }

  /// Independent stream for replication `stream` of experiment `seed`.
  static Rng child(std::uint64_t seed, std::uint64_t stream) {
    return Rng(child_seed(seed, stream));
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

  /// Uniform draw on the open interval (0,1); never returns 0 or 1,
  /// so logarithms and inverse CDFs are always finite.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the second draw of each pair is cached.
  double next_normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
  }

private:
  std::array<std::uint64_t, 4> state_{};
  double cached_ = 0.0;
  bool has_cached_ = false;
};

} // namespace tailgarch
