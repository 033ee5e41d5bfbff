#include "diffsim/prn.hpp"

namespace diffsim::prn {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace

Block philox4x32(Block ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::uint64_t KeyedStream::bits(std::uint32_t a, std::uint32_t b, std::uint32_t c) const {
  const Block out = philox4x32({static_cast<std::uint32_t>(stream_), a, b, c},
                               {static_cast<std::uint32_t>(seed_),
                                static_cast<std::uint32_t>(seed_ >> 32)});
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

double KeyedStream::uniform(std::uint32_t a, std::uint32_t b, std::uint32_t c) const {
  // (k + 0.5) / 2^53 never hits 0 or 1.
  const std::uint64_t k = bits(a, b, c) >> 11;
  return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

}  // namespace diffsim::prn
