// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "vidstyle/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "vidstyle/error.hpp"

namespace vidstyle {

namespace fs = std::filesystem;

Mask Mask::filled(std::size_t height, std::size_t width, std::uint8_t value) {
  Mask m;
  m.height = height;
  m.width = width;
  m.values.assign(height * width, value);
  return m;
}

std::size_t Mask::count() const noexcept {
  return static_cast<std::size_t>(std::count(values.begin(), values.end(), std::uint8_t{1}));
}

namespace {

struct PngImage {
  png_image image{};
  PngImage() {
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

std::vector<std::uint8_t> read_png(const fs::path& path, png_uint_32 format, std::size_t& height,
                                   std::size_t& width) {
  PngImage png;
  if (!png_image_begin_read_from_file(&png.image, path.string().c_str())) {
    throw FormatError(path.string() + ": " + png.image.message);
  }
  png.image.format = format;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(png.image));
  if (!png_image_finish_read(&png.image, nullptr, buf.data(), 0, nullptr)) {
    throw FormatError(path.string() + ": " + png.image.message);
  }
  height = png.image.height;
  width = png.image.width;
  return buf;
}

void write_png(const fs::path& path, png_uint_32 format, std::size_t height, std::size_t width,
               const std::vector<std::uint8_t>& buf) {
  PngImage png;
  png.image.width = static_cast<png_uint_32>(width);
  png.image.height = static_cast<png_uint_32>(height);
  png.image.format = format;
  if (!png_image_write_to_file(&png.image, path.string().c_str(), 0, buf.data(), 0, nullptr)) {
    throw FormatError("cannot write " + path.string() + ": " + png.image.message);
  }
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

Mask read_mask_png(const fs::path& path) {
  Mask m;
  auto buf = read_png(path, PNG_FORMAT_GRAY, m.height, m.width);
  m.values.resize(buf.size());
  std::transform(buf.begin(), buf.end(), m.values.begin(),
                 [](std::uint8_t v) { return static_cast<std::uint8_t>(v >= 128 ? 1 : 0); });
  return m;
}

void write_mask_png(const Mask& mask, const fs::path& path) {
  if (mask.values.size() != mask.pixels()) throw ShapeError("mask size mismatch");
  std::vector<std::uint8_t> buf(mask.values.size());
  std::transform(mask.values.begin(), mask.values.end(), buf.begin(),
                 [](std::uint8_t v) { return static_cast<std::uint8_t>(v ? 255 : 0); });
  write_png(path, PNG_FORMAT_GRAY, mask.height, mask.width, buf);
}

Tensor read_rgb_png(const fs::path& path) {
  std::size_t h = 0, w = 0;
  auto buf = read_png(path, PNG_FORMAT_RGB, h, w);
  Tensor img({h, w, 3});
  auto d = img.data();
  for (std::size_t i = 0; i < buf.size(); ++i) d[i] = buf[i] / 255.0;
  return img;
}

void write_rgb_png(const Tensor& image, const fs::path& path) {
  if (image.rank() != 3 || image.shape()[2] == 0) {
    throw ShapeError("write_rgb_png expects H x W x C, got " + shape_str(image.shape()));
  }
  const std::size_t h = image.shape()[0];
  const std::size_t w = image.shape()[1];
  const std::size_t c = image.shape()[2];
  const auto d = image.data();
  if (c == 1) {
    std::vector<std::uint8_t> buf(h * w);
    for (std::size_t i = 0; i < h * w; ++i) buf[i] = to_byte(d[i]);
    write_png(path, PNG_FORMAT_GRAY, h, w, buf);
    return;
  }
  std::vector<std::uint8_t> buf(h * w * 3);
  for (std::size_t i = 0; i < h * w; ++i) {
    for (std::size_t k = 0; k < 3; ++k) buf[i * 3 + k] = to_byte(d[i * c + std::min(k, c - 1)]);
  }
  write_png(path, PNG_FORMAT_RGB, h, w, buf);
}

fs::path frame_path(const fs::path& dir, std::size_t index) {
  char name[32];
  std::snprintf(name, sizeof name, "%05zu.png", index);
  return dir / name;
}

std::vector<fs::path> list_pngs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw FormatError(dir.string() + ": not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Tensor read_frame_dir(const fs::path& dir) {
  const auto files = list_pngs(dir);
  if (files.empty()) throw FormatError(dir.string() + ": no .png frames");
  std::vector<Tensor> frames;
  frames.reserve(files.size());
  for (const auto& f : files) {
    Tensor img = read_rgb_png(f);
    Shape s = img.shape();
    s.insert(s.begin(), 1);
    if (!frames.empty() && frames.front().shape() != s) {
      throw ShapeError(f.string() + ": frame size differs from " + files.front().string());
    }
    frames.push_back(img.reshaped(s));
  }
  return concat0(frames);
}

void write_frame_dir(const Tensor& video, const fs::path& dir) {
  if (video.rank() != 4) throw ShapeError("write_frame_dir expects N x H x W x C");
  fs::create_directories(dir);
  const Shape frame_shape{video.shape()[1], video.shape()[2], video.shape()[3]};
  for (std::size_t i = 0; i < video.shape()[0]; ++i) {
    write_rgb_png(video.slice0(i).reshaped(frame_shape), frame_path(dir, i));
  }
}

MaskSequence read_mask_dir(const fs::path& dir) {
  const auto files = list_pngs(dir);
  if (files.empty()) throw FormatError(dir.string() + ": no .png masks");
  MaskSequence masks;
  for (const auto& f : files) masks.push_back(read_mask_png(f));
  return masks;
}

void write_mask_dir(const MaskSequence& masks, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < masks.size(); ++i) write_mask_png(masks[i], frame_path(dir, i));
}

}  // namespace vidstyle
