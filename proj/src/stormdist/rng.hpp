// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace stormdist {

/// splitmix64 output function.
std::uint64_t mix64(std::uint64_t z) noexcept;

/// Seed for one draw: mix64(master ^ mix64(stream ^ mix64(index + golden))).
/// Two draws collide only if all three inputs match.
std::uint64_t draw_seed(std::uint64_t master_seed, std::uint64_t stream,
                        std::uint64_t index) noexcept;

/// Reserved stream ids. Worker sample streams use the worker id directly.
namespace streams {
inline constexpr std::uint64_t kStep5Offset = 1ULL << 32;  // + worker id
inline constexpr std::uint64_t kCenters = 0xC0FFEE0000000001ULL;
inline constexpr std::uint64_t kReservoir = 0xC0FFEE0000000002ULL;
inline constexpr std::uint64_t kOutputSelect = 0xC0FFEE0000000003ULL;
inline constexpr std::uint64_t kEstimatePoints = 0xC0FFEE0000000004ULL;
inline constexpr std::uint64_t kEstimateSamples = 0xC0FFEE0000000005ULL;
}  // namespace streams

/// Small counter-seeded generator. Sequences depend only on the seed, so
/// any (master, stream, index) triple reproduces bit-for-bit everywhere.
class SplitMixRng {
 public:
  explicit SplitMixRng(std::uint64_t seed) noexcept : state_(seed) {}
  SplitMixRng(std::uint64_t master_seed, std::uint64_t stream, std::uint64_t index) noexcept
      : state_(draw_seed(master_seed, stream, index)) {}

  std::uint64_t next_u64() noexcept;
  /// Uniform on (0, 1].
  double uniform_open0() noexcept;
  /// Uniform on [0, 1).
  double uniform() noexcept;
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;
  /// Standard normal via Box-Muller.
  double normal() noexcept;

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace stormdist
