#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace corl {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// SplitMix64 generator. Cheap to construct, which matters because every
/// rollout gets its own engine.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Counter-based stream key. Children are derived purely from (key, index),
/// so the draws of a substream never depend on evaluation order.
class RngStream {
 public:
  constexpr explicit RngStream(std::uint64_t key = 0) : key_(key) {}

  constexpr RngStream substream(std::uint64_t index) const {
    return RngStream(detail::splitmix64(key_ ^ detail::splitmix64(index + 0x632be59bd9b4e019ULL)));
  }

  SplitMix64 engine() const { return SplitMix64(key_); }

  constexpr std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
};

/// Standard normal sampler over a SplitMix64 engine (Box-Muller, no caching,
/// so every draw consumes exactly two uniforms).
class NormalSampler {
 public:
  explicit NormalSampler(const RngStream& s) : eng_(s.engine()) {}

  double operator()() {
    // 53-bit uniforms in (0, 1]
    const double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  SplitMix64& engine() { return eng_; }

 private:
  SplitMix64 eng_;
};

}  // namespace corl
