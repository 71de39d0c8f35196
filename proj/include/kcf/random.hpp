#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <vector>

namespace kcf {

/// SplitMix64 finaliser; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a parent seed and a key path.
///
/// Streams are addressed by position, so adding a new key (a larger sample
/// size, another replication) never shifts the seeds of existing ones.
std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> keys) noexcept;

/// Well-known stream tags used when deriving child seeds.
namespace stream {
inline constexpr std::uint64_t kSplit = 0x53504c4954ULL;            // "SPLIT"
inline constexpr std::uint64_t kCrossValidation = 0x43564c44ULL;    // "CVLD"
inline constexpr std::uint64_t kDataset = 0x44415441ULL;            // "DATA"
}  // namespace stream

/// SplitMix64 generator with portable uniform/normal draws.
///
/// Satisfies UniformRandomBitGenerator, but the conversions below are used
/// in place of <random> distributions so that draws are identical across
/// standard library implementations.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Standard normal via the Marsaglia polar method.
  double normal() noexcept;

  /// Uniform integer in [0, bound); bound must be positive.
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Uniformly random permutation of 0..n-1 (Fisher-Yates).
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

}  // namespace kcf
