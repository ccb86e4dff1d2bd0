#pragma once

#include <array>
#include <cstdint>

namespace vfp {

/// Philox4x32-10 block function (Salmon et al., SC'11): a keyed bijection on
/// 128-bit counters.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based normal stream. Each draw is a pure function of
/// (seed, stream, index, step), so the order in which particles are visited
/// never changes the numbers they receive.
class CounterNormal {
 public:
  CounterNormal(std::uint64_t seed, std::uint64_t stream);

  double operator()(std::uint64_t index, std::uint64_t step) const;

  /// Uniform on [0, 1).
  double uniform(std::uint64_t index, std::uint64_t step) const;

 private:
  std::array<std::uint32_t, 2> key_;
};

/// Stream identifiers used by the experiments.
namespace streams {
inline constexpr std::uint64_t kDynamics = 0;
inline constexpr std::uint64_t kInitial = 1;
inline constexpr std::uint64_t kInitialTilde = 2;
inline constexpr std::uint64_t kGridSampling = 3;
}  // namespace streams

/// splitmix64 finaliser, used to derive keys from (seed, stream).
std::uint64_t mix64(std::uint64_t x);

}  // namespace vfp
