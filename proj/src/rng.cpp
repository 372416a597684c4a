#include "blockchol/rng.hpp"

#include <boost/math/distributions/normal.hpp>

namespace blockchol {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(prod >> 32);
  lo = static_cast<std::uint32_t>(prod);
}

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

double RandomStream::uniform(std::uint64_t index) const {
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(index),
                                static_cast<std::uint32_t>(index >> 32), stream_, 0u};
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed_),
                            static_cast<std::uint32_t>(seed_ >> 32)};
  const auto out = Philox4x32::block(ctr, key);
  const std::uint64_t bits = (static_cast<std::uint64_t>(out[0]) << 32 | out[1]) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal(std::uint64_t index) const {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, uniform(index));
}

}  // namespace blockchol
