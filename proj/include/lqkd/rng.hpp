#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace lqkd {

/// Stream separation tags for derive_round_seed.
enum class StreamTag : std::uint64_t {
  round = 1,
  check = 2,
  trial = 3,
  unitary = 4,
};

/// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based seed for the (master, index, tag) triple.
///
/// For a fixed master seed and tag the map index -> seed is a bijection, so
/// per-round seeds never collide within one stream.
constexpr std::uint64_t derive_round_seed(std::uint64_t master, std::uint64_t index,
                                          std::uint64_t tag) {
  constexpr std::uint64_t golden = 0x9e3779b97f4a7c15ULL;
  const std::uint64_t key = mix64(master ^ mix64(tag * golden + 0x632be59bd9b4e019ULL));
  return mix64(key + index * golden);
}

constexpr std::uint64_t derive_round_seed(std::uint64_t master, std::uint64_t index,
                                          StreamTag tag) {
  return derive_round_seed(master, index, static_cast<std::uint64_t>(tag));
}

/// Per-round random source. Conversions to doubles and bounded integers are
/// written out so that results are identical across standard libraries.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Requires n > 0.
  int below(int n) {
    const auto bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<int>(x % bound);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 engine_;
};

inline RandomStream round_stream(std::uint64_t master, std::uint64_t index, StreamTag tag) {
  return RandomStream(derive_round_seed(master, index, tag));
}

}  // namespace lqkd
