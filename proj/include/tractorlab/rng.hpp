#pragma once

// PCG32 (XSH-RR): 64-bit LCG state, 32-bit output.
//   state' = state * 6364136223846793005 + inc,  inc = (stream << 1) | 1
//   out    = rotr32(((state >> 18) ^ state) >> 27, state >> 59)
// Seeding follows the reference: state = 0; step; state += seed; step.
// uniform() = ((a >> 5) * 2^26 + (b >> 6)) * 2^-53 for consecutive outputs a, b.

#include <cstdint>
#include <vector>

namespace tractorlab {

class Pcg32 {
 public:
  static constexpr std::uint64_t kMultiplier = 6364136223846793005ULL;
  static constexpr std::uint64_t kDefaultStream = 1442695040888963407ULL >> 1;

  explicit Pcg32(std::uint64_t seed, std::uint64_t stream = kDefaultStream) : inc_((stream << 1) | 1u) {
    next_u32();
    state_ += seed;
    next_u32();
  }

  std::uint32_t next_u32() {
    const std::uint64_t old = state_;
    state_ = old * kMultiplier + inc_;
    const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    const auto rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t hi = next_u32() >> 5;  // 27 bits
    const std::uint64_t lo = next_u32() >> 6;  // 26 bits
    return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_;
};

}  // namespace tractorlab
