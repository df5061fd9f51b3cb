// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "vidstyle/error.hpp"
#include "vidstyle/flow_field.hpp"

namespace vidstyle {

FlowField FlowField::zeros(std::size_t height, std::size_t width) {
  return constant(height, width, 0.0, 0.0);
}

FlowField FlowField::constant(std::size_t height, std::size_t width, double u, double v) {
  FlowField f;
  f.height = height;
  f.width = width;
  f.u.assign(height * width, u);
  f.v.assign(height * width, v);
  f.occluded.assign(height * width, 0);
  return f;
}

FlowField read_flo(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12) throw FormatError(path.string() + ": not a .flo file (too short)");

  float magic;
  std::memcpy(&magic, bytes.data(), 4);
  if (std::memcmp(&magic, &kFloMagic, 4) != 0) {
    throw FormatError(path.string() + ": not a .flo file (bad magic)");
  }
  std::int32_t w, h;
  std::memcpy(&w, bytes.data() + 4, 4);
  std::memcpy(&h, bytes.data() + 8, 4);
  if (w <= 0 || h <= 0 || w > (1 << 20) || h > (1 << 20)) {
    throw FormatError(path.string() + ": implausible .flo dimensions");
  }
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() != 12 + n * 8) {
    throw FormatError(path.string() + ": .flo payload size mismatch");
  }

  FlowField f;
  f.width = static_cast<std::size_t>(w);
  f.height = static_cast<std::size_t>(h);
  f.u.resize(n);
  f.v.resize(n);
  f.occluded.assign(n, 0);
  const char* p = bytes.data() + 12;
  for (std::size_t i = 0; i < n; ++i) {
    float uv[2];
    std::memcpy(uv, p + i * 8, 8);
    f.u[i] = uv[0];
    f.v[i] = uv[1];
    if (!(std::abs(f.u[i]) < kUnknownFlow) || !(std::abs(f.v[i]) < kUnknownFlow)) {
      f.occluded[i] = 1;
    }
  }
  return f;
}

void write_flo(const FlowField& flow, const std::filesystem::path& path) {
  const std::size_t n = flow.pixels();
  if (flow.u.size() != n || flow.v.size() != n) throw ShapeError("write_flo: component size mismatch");
  std::string bytes(12 + n * 8, '\0');
  const auto w = static_cast<std::int32_t>(flow.width);
  const auto h = static_cast<std::int32_t>(flow.height);
  std::memcpy(bytes.data(), &kFloMagic, 4);
  std::memcpy(bytes.data() + 4, &w, 4);
  std::memcpy(bytes.data() + 8, &h, 4);
  for (std::size_t i = 0; i < n; ++i) {
    const float uv[2] = {static_cast<float>(flow.u[i]), static_cast<float>(flow.v[i])};
    std::memcpy(bytes.data() + 12 + i * 8, uv, 8);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

}  // namespace vidstyle
