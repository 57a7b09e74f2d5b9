#pragma once

#include <array>
#include <cstdint>

namespace fairpool {

/// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as
/// 1, 2, 3", SC'11). A keyed bijection of a 128-bit counter, so any draw can
/// be computed directly from its coordinates without sequential state.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter counter, Key key) noexcept;
};

/// Stream of uniforms addressed by (seed, sample index, stream id).
///
/// The seed is the Philox key; the counter words are
/// (draw block, stream id, index low, index high). Each exogenous variable
/// gets its own stream id, so the value drawn for a variable at a given
/// sample index depends on nothing but (seed, index, stream id). Sampling
/// indices in any order, on any number of threads, gives identical results.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t index, std::uint32_t stream) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double next_open_uniform() noexcept;

 private:
  Philox4x32::Key key_;
  Philox4x32::Counter counter_;
  Philox4x32::Counter buffer_{};
  int buffered_ = 0;
};

/// SplitMix64 finalizer; used to derive independent 64-bit keys.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace fairpool
