// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>

namespace vidstyle {

/// SplitMix64 finaliser.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// FNV-1a over a substream name.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

/// Counter-based 64-bit generator: draw n of stream `key` is
/// splitmix64(key + n * golden). Every value depends only on (key, n), so
/// sequences are identical across platforms, compilers and thread counts.
/// No std:: distributions are used because their output is
/// implementation-defined.
class CounterRng {
 public:
  constexpr explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  /// Independent substream derived from a run seed and a stable name, e.g.
  /// CounterRng::stream(seed, "mask.sample").
  static constexpr CounterRng stream(std::uint64_t seed, std::string_view name,
                                     std::uint64_t index = 0) noexcept {
    return CounterRng(splitmix64(splitmix64(seed ^ fnv1a64(name)) + index));
  }

  constexpr std::uint64_t next() noexcept {
    return splitmix64(key_ + 0x9E3779B97F4A7C15ull * counter_++);
  }

  /// Uniform in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound), bound > 0; unbiased (Lemire with rejection).
  std::uint64_t below(std::uint64_t bound) noexcept;

  /// Standard normal via Box-Muller.
  double normal() noexcept;

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace vidstyle
