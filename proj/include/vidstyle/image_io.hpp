// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "vidstyle/mask.hpp"
#include "vidstyle/tensor.hpp"

namespace vidstyle {

/// Any 8-bit PNG, converted to gray; value >= 128 is foreground.
Mask read_mask_png(const std::filesystem::path& path);
/// Single-channel 8-bit PNG with 0 / 255.
void write_mask_png(const Mask& mask, const std::filesystem::path& path);

/// H x W x 3 tensor with values in [0, 1].
Tensor read_rgb_png(const std::filesystem::path& path);
/// H x W x C tensor; C == 1 writes gray, otherwise the first three channels
/// are written as RGB. Values are clamped to [0, 1] and rounded.
void write_rgb_png(const Tensor& image, const std::filesystem::path& path);

/// `dir/%05d.png`
std::filesystem::path frame_path(const std::filesystem::path& dir, std::size_t index);
/// All *.png files in `dir`, sorted by name.
std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir);

/// N x H x W x 3 pixel video from a frame directory.
Tensor read_frame_dir(const std::filesystem::path& dir);
void write_frame_dir(const Tensor& video, const std::filesystem::path& dir);

MaskSequence read_mask_dir(const std::filesystem::path& dir);
void write_mask_dir(const MaskSequence& masks, const std::filesystem::path& dir);

}  // namespace vidstyle
