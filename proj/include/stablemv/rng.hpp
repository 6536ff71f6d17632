#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace stablemv {

namespace detail {

// splitmix64 finalizer; used only to decorrelate (seed, stream) pairs.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Source of random draws: a thin wrapper over std::mt19937_64 with
/// helpers for the open-interval uniforms the stable samplers need.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t state_seed) : engine_(state_seed) {}

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform on (a, b).
  double uniform_open(double a, double b) { return a + (b - a) * uniform_open(); }

  /// Standard exponential, strictly positive.
  double exponential() { return -std::log(uniform_open()); }

  double normal() { return normal_(engine_); }

  std::uint64_t bits() { return engine_(); }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Deterministic, addressable random stream. Identical (seed, stream_id)
/// pairs reproduce identical draws; substreams are derived by hashing so
/// that distinct ids give statistically independent engines.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  RngStream substream(std::uint64_t k) const {
    return RngStream(seed_, detail::mix64(stream_id_ ^ detail::mix64(k + 0x632be59bd9b4e019ULL)));
  }

  RandomSource source() const {
    return RandomSource(detail::mix64(seed_ ^ detail::mix64(stream_id_ + 0xd1b54a32d192ed03ULL)));
  }

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
};

}  // namespace stablemv
