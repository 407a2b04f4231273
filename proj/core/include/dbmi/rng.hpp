#pragma once

#include <array>
#include <cstdint>

namespace dbmi {

// SplitMix64 step; used for seeding and for deriving substream seeds.
std::uint64_t splitmix64(std::uint64_t& state);

// Seed for the substream with the given index. Documented splitting rule:
//   sub = splitmix64(master ^ (0x9E3779B97F4A7C15 * (index + 1)))
// Batch-parallel callers derive one stream per item with this rule so the
// result does not depend on how items are assigned to threads.
std::uint64_t substream_seed(std::uint64_t master_seed, std::uint64_t index);

// xoshiro256** stream. Chosen over std engines because the 4-word state
// serializes trivially (checkpoints must round-trip bit-exactly) and the
// output is identical on every platform.
//
// Draw accounting, for callers that need a fixed draw count:
//   next_u64()        1 raw draw
//   uniform01()       1 raw draw
//   uniform_below(n)  >= 1 raw draws (unbounded rejection, mean < 2)
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution: (next_u64() >> 11) * 2^-53.
  double uniform01();

  // Uniform on {0, ..., bound-1}; bound >= 1. Unbiased via rejection.
  std::uint64_t uniform_below(std::uint64_t bound);

  std::array<std::uint64_t, 4> state() const { return state_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { state_ = s; }

 private:
  std::array<std::uint64_t, 4> state_;
};

}  // namespace dbmi
