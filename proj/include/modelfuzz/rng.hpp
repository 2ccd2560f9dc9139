#pragma once

#include <array>
#include <cstdint>

namespace modelfuzz {

// Deterministic 64-bit generator (xoshiro256**, seeded through splitmix64).
// The standard <random> engines are portable but the distributions are not;
// every draw the engine produces must be identical across platforms so run
// logs and CSV outputs stay byte-stable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, n). n must be >= 1. Rejection-sampled, no modulo bias.
  std::uint64_t below(std::uint64_t n);

  std::uint8_t next_byte();

  // Uniform in [0, 1), 53-bit resolution.
  double unit_real();

  bool chance(double p);

 private:
  std::array<std::uint64_t, 4> state_;
};

// One root seed per run; phases and sub-phases get their own streams so a
// change in how one phase consumes randomness cannot perturb another.
std::uint64_t derive_stream(std::uint64_t root_seed, std::uint64_t tag);

namespace stream_tag {
inline constexpr std::uint64_t kWarmup = 1;
inline constexpr std::uint64_t kStrategyBase = 2;  // + strategy index
inline constexpr std::uint64_t kTieBreakBase = 16; // + iteration
}  // namespace stream_tag

}  // namespace modelfuzz
