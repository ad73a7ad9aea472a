#pragma once

#include <cstdint>
#include <random>

namespace memsizer {

/// Seeded stream with portable derived draws. std::mt19937_64 output is fixed
/// by the standard, but the std distributions are not, so the conversions
/// here are spelled out.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1].
  double uniform_open_closed() { return 1.0 - uniform01(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  /// Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo);
    if (span == UINT64_MAX) return static_cast<std::int64_t>(engine_());
    return lo + static_cast<std::int64_t>(below(span + 1));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace memsizer
