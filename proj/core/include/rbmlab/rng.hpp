// Keyed random streams. Every (seed, stream, index) triple owns an
// independent engine, so row-parallel generation gives the same numbers
// for any thread count.
#pragma once

#include <cstdint>
#include <random>

namespace rbm {

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t mix_key(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

enum Stream : std::uint64_t {
  kStreamU = 1,
  kStreamW = 2,
  kStreamNoise = 3,
  kStreamInit = 4,
  kStreamSe = 5,
  kStreamDmft = 6,
  kStreamCd = 7,
  kStreamSvd = 8,
};

class KeyedRng {
 public:
  KeyedRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
      : engine_(mix_key(seed, stream, index)) {}

  double gaussian() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  double rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace rbm
