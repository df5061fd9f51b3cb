// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace vidstyle {

/// Dense forward displacement field between two frames, in pixels.
/// Pixel x of frame A corresponds to x + (u, v) in frame B.
struct FlowField {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> u;  // row-major, height * width
  std::vector<double> v;
  /// 1 where the flow is unknown or the pixel is occluded. Derived, never
  /// written to .flo files.
  std::vector<std::uint8_t> occluded;

  static FlowField zeros(std::size_t height, std::size_t width);
  static FlowField constant(std::size_t height, std::size_t width, double u, double v);

  std::size_t pixels() const noexcept { return height * width; }
};

/// Middlebury sentinel for unknown flow.
inline constexpr double kUnknownFlow = 1e9;
inline constexpr float kFloMagic = 202021.25f;

/// Reads a Middlebury .flo file. Components with magnitude >= 1e9 are kept
/// verbatim and their pixels are marked occluded.
FlowField read_flo(const std::filesystem::path& path);
void write_flo(const FlowField& flow, const std::filesystem::path& path);

}  // namespace vidstyle
