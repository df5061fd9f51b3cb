// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace vidstyle {

/// Binary mask, row-major, values in {0, 1}.
struct Mask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> values;

  static Mask filled(std::size_t height, std::size_t width, std::uint8_t value);

  std::size_t pixels() const noexcept { return height * width; }
  std::uint8_t at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
  std::size_t count() const noexcept;

  bool operator==(const Mask&) const = default;
};

using MaskSequence = std::vector<Mask>;

}  // namespace vidstyle
