#pragma once

#include <cstdint>

namespace martrace {

// splitmix64: state += 0x9E3779B97F4A7C15, then two xor-shift-multiply
// rounds. Fixed here so seeded suites reproduce bit-exactly everywhere.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1) with 53 random bits
  double uniform01() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  // uniform in [-1, 1)
  double uniform_sym() { return 2.0 * uniform01() - 1.0; }

 private:
  std::uint64_t state_;
};

}  // namespace martrace
