// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "vidstyle/tensor.hpp"

namespace vidstyle {

enum class Dtype { f32, f64 };

/// NPY (format 1.0 / 2.0 / 3.0) reader. Only little-endian C-order float32 and
/// float64 payloads are accepted; float32 data is widened exactly.
Tensor read_npy(const std::filesystem::path& path);
Tensor parse_npy(std::string_view bytes);

/// Writes format 1.0 (2.0 when the header does not fit in 16 bits), header
/// padded to a 64-byte boundary exactly as numpy.save does.
void write_npy(const Tensor& t, const std::filesystem::path& path, Dtype dtype = Dtype::f64);
std::string encode_npy(const Tensor& t, Dtype dtype = Dtype::f64);

}  // namespace vidstyle
