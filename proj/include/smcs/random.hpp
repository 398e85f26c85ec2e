#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace smcs {

namespace detail {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t v) noexcept {
  return mix64(h ^ (v + kGolden + (h << 6) + (h >> 2)));
}

}  // namespace detail

/// Small counter-keyed generator (SplitMix64 sequence). Satisfies
/// UniformRandomBitGenerator so it plugs into <random> distributions.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t key) noexcept : state_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    state_ += detail::kGolden;
    return detail::mix64(state_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1), never exactly zero.
  double uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_(*this); }
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::uint64_t state_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Seeded source of independent, reproducible random streams.
///
/// A source is a (seed, stream) pair. Draws are obtained through `rng(...)`,
/// which keys a fresh generator by up to three counters (for example time
/// index, particle index, purpose tag). Two sources with equal seed and stream
/// yield identical generators for identical counters, independent of the
/// order in which they are requested, so per-particle work can run in any
/// order or on any thread.
struct RandomSource {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  [[nodiscard]] Rng rng(std::uint64_t a = 0, std::uint64_t b = 0,
                        std::uint64_t c = 0) const noexcept {
    std::uint64_t h = detail::mix64(seed ^ 0x5851f42d4c957f2dULL);
    h = detail::combine(h, stream);
    h = detail::combine(h, a);
    h = detail::combine(h, b);
    h = detail::combine(h, c);
    return Rng(h);
  }

  /// Derived source for an independent sub-computation.
  [[nodiscard]] RandomSource child(std::uint64_t id) const noexcept {
    return {seed, detail::combine(detail::combine(stream, 0xc4ceb9fe1a85ec53ULL), id)};
  }

  friend bool operator==(const RandomSource&, const RandomSource&) = default;
};

}  // namespace smcs
