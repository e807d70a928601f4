// Counter-based random numbers for reproducible simulation.
//
// Draw i of stream (seed, stream_id) is
//
//     key   = splitmix64(seed ^ splitmix64(stream_id))
//     u64_i = splitmix64(key + (i + 1) * 0x9E3779B97F4A7C15)
//
// where splitmix64 is the finaliser of Steele, Lea & Flood (2014). Uniform
// doubles take the top 53 bits; normals use the Box-Muller cosine branch on
// two consecutive uniforms. The mapping is fully specified, so any
// implementation following it reproduces the same streams.

#ifndef MSMAAD_RNG_HPP
#define MSMAAD_RNG_HPP

#include <cstdint>

namespace msmaad {

std::uint64_t splitmix64(std::uint64_t x);

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();
  // Uniform on [0, 1).
  double uniform();
  double normal();
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Stream identifiers used by the simulator.
namespace streams {
inline constexpr std::uint64_t kEeg = 1;
inline constexpr std::uint64_t kChain = 2;
inline constexpr std::uint64_t kNoise = 3;
inline constexpr std::uint64_t kCommon = 4;
inline constexpr std::uint64_t kSwap = 5;
inline constexpr std::uint64_t kGmmRestart = 6;
}  // namespace streams

}  // namespace msmaad

#endif  // MSMAAD_RNG_HPP
