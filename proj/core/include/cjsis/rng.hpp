#ifndef CJSIS_RNG_HPP
#define CJSIS_RNG_HPP

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace cjsis {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
/// Pure function of (counter, key); used as the portable core of every stream in the library.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Domain tags that keep the substreams of different pipeline stages disjoint.
enum class StreamDomain : std::uint64_t {
  simulate = 1,
  subsample = 2,
  chain = 3,
  random_effect = 4,
  weights = 5,
  weights_coarse = 6,
  resample = 7,
  audit = 8,
  geweke = 9,
  init = 10,
};

/// Counter-based random stream.
///
/// Stream-splitting rule: a stream is identified by the master seed and a path
/// of integers, conventionally `{domain, subsample m, ...indices}` (for
/// example `{weights, m, draw k, entry e, copy c}`). The path is hashed into a
/// 64-bit Philox key and a 64-bit stream word that occupies the upper half of
/// the 128-bit counter; the lower half counts output blocks. Two streams share
/// output only if both 64-bit hashes collide. Streams are cheap to construct,
/// so callers derive a fresh one per unit of work instead of sharing state
/// between tasks.
///
/// Satisfies UniformRandomBitGenerator. All derived variates (uniform,
/// normal, bounded integers) are computed with portable arithmetic so that a
/// given (seed, path) produces identical values on every platform.
class Stream {
 public:
  using result_type = std::uint64_t;

  Stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// Uniform on the open interval (0, 1) with 53-bit resolution.
  double uniform() noexcept;

  /// Standard normal by inversion of one uniform.
  double normal() noexcept;

  /// Uniform integer in [0, n) (Lemire's unbiased multiply-shift), n > 0.
  std::uint64_t below(std::uint64_t n) noexcept;

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_{};
  std::uint64_t stream_word_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int available_ = 0;
};

/// Convenience for building stream paths from enum tags.
constexpr std::uint64_t tag(StreamDomain d) noexcept { return static_cast<std::uint64_t>(d); }

}  // namespace cjsis

#endif
