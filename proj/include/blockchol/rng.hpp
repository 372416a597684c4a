#pragma once

#include <array>
#include <cstdint>

namespace blockchol {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Output is a
/// pure function of (key, counter), so any draw can be addressed directly and
/// results do not depend on thread scheduling.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key);
};

/// A keyed stream of doubles addressed by a 64-bit draw index. `stream`
/// separates independent uses of one seed (sampling, structure draws, ...).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint32_t stream) : seed_(seed), stream_(stream) {}

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform(std::uint64_t index) const;
  /// Standard normal via the inverse CDF of uniform(index).
  double normal(std::uint64_t index) const;

 private:
  std::uint64_t seed_;
  std::uint32_t stream_;
};

}  // namespace blockchol
