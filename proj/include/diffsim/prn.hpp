#pragma once

// Counter-based pseudo-random numbers (Philox-4x32-10). A draw is a pure
// function of (seed, stream, counter words), so twin models consume
// identical variates no matter in which order they ask for them.

#include <array>
#include <cstdint>

namespace diffsim::prn {

using Block = std::array<std::uint32_t, 4>;

Block philox4x32(Block counter, std::array<std::uint32_t, 2> key);

/// Named streams keep draws for different purposes independent.
enum class Stream : std::uint32_t {
  Placement = 1,
  Turn = 2,
  InitialInfection = 3,
  Contact = 4,
  Recovery = 5,
  Movement = 6,
  Graph = 7,
};

class KeyedStream {
 public:
  KeyedStream(std::uint64_t seed, Stream stream) : seed_(seed), stream_(stream) {}

  /// Uniform in the open interval (0, 1), 53-bit resolution.
  double uniform(std::uint32_t a, std::uint32_t b = 0, std::uint32_t c = 0) const;
  std::uint64_t bits(std::uint32_t a, std::uint32_t b = 0, std::uint32_t c = 0) const;

 private:
  std::uint64_t seed_;
  Stream stream_;
};

}  // namespace diffsim::prn
