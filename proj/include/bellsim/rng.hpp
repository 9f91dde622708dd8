#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>

namespace bellsim {

// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3", SC'11). Output is a pure function of
// (counter, key), which lets every trial own an independent substream.
struct Philox4x32 {
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Block generate(Block counter, Key key) noexcept;
};

// Stream purposes. Distinct tags give disjoint counter spaces under one seed.
enum class StreamTag : std::uint32_t {
  Trial = 1,
  DetectorKeep = 2,
  DetectorDark = 3,
};

// Substream of Philox4x32-10 addressed by (seed, tag, index).
//   key     = (seed low 32 bits, seed high 32 bits)
//   counter = (block, tag, index low 32 bits, index high 32 bits)
// Each block yields two 64-bit draws, low word first.
// Satisfies std::uniform_random_bit_generator.
class CounterRng {
public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, StreamTag tag, std::uint64_t index) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  // 53-bit uniform on [0, 1).
  double uniform() noexcept;
  // Uniform on (0, 1]; safe for log().
  double uniform_positive() noexcept;
  // Standard normal via Box-Muller; consumes two uniforms per call.
  double normal() noexcept;
  double exponential(double rate) noexcept;
  // Index drawn from nonnegative weights summing to ~1 by inverse CDF.
  int discrete(std::span<const double> weights) noexcept;

private:
  void refill() noexcept;

  Philox4x32::Key key_;
  Philox4x32::Block counter_;
  Philox4x32::Block buffer_{};
  int used_ = 4;
};

}  // namespace bellsim
