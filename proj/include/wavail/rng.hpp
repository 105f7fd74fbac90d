#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace wavail {

/// SplitMix64 finalizer. Used to derive independent child seeds from
/// (seed, stream, index) so every work item owns its own stream.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Named sub-streams. Placement and AP selection never share draws.
enum class Stream : std::uint64_t {
  placement = 1,
  selection = 2,
  fading = 3,
  probe = 4,
};

constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                                    std::uint64_t index = 0) noexcept {
  return splitmix64(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(stream)) ^ index);
}

/// Seeded random stream with platform-independent conversions.
///
/// std::mt19937_64 has a fully specified output sequence, but the standard
/// distributions do not, so uniform and exponential draws are derived here.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}
  RandomStream(std::uint64_t seed, Stream stream, std::uint64_t index = 0)
      : engine_(derive_seed(seed, stream, index)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  /// Unit-mean exponential by inverse transform.
  double exponential() { return -std::log1p(-uniform()); }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace wavail
