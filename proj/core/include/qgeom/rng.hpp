// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>

namespace qgeom {

/// SplitMix64 finalizer (Stafford variant 13). Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t z) noexcept;

/// Seed for an independent sub-stream: mix64(master ^ mix64(index + golden)).
/// Used to fan trials and tensors out of a single master seed without any
/// sequential coupling between them.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Counter-based generator. Output i is mix64(key + (i+1) * golden), so the
/// stream is a pure function of (key, counter) and can be split or replayed
/// freely. Gaussian draws use the basic Box-Muller transform:
///   u1 in (0,1], u2 in [0,1), r = sqrt(-2 ln u1),
///   z0 = r cos(2 pi u2), z1 = r sin(2 pi u2),
/// returning z0 then z1 from consecutive pairs.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on (0, 1].
  double uniform_open_low() noexcept;
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller.
  double normal() noexcept;
  /// Unbiased integer in [0, bound) by rejection (bound > 0).
  std::uint64_t below(std::uint64_t bound) noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
  std::optional<double> spare_;
};

}  // namespace qgeom
