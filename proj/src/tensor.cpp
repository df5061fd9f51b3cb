// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "vidstyle/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "vidstyle/error.hpp"

namespace vidstyle {

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, std::size_t b) { return a * b; });
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != data_.size()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_str(shape_));
  }
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     shape_str(shape_));
  }
  return shape_[axis];
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.size()) {
    throw ShapeError("index rank " + std::to_string(index.size()) + " for tensor " +
                     shape_str(shape_));
  }
  std::size_t off = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= shape_[axis]) {
      throw ShapeError("index " + std::to_string(i) + " out of bounds on axis " +
                       std::to_string(axis) + " of " + shape_str(shape_));
    }
    off = off * shape_[axis] + i;
    ++axis;
  }
  return off;
}

double& Tensor::at(std::initializer_list<std::size_t> index) { return data_[offset(index)]; }
double Tensor::at(std::initializer_list<std::size_t> index) const {
  return data_[offset(index)];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  }
  return Tensor(std::move(shape), data_);
}

std::span<const double> Tensor::row0(std::size_t i) const {
  const std::size_t n = shape_.empty() ? 0 : shape_[0];
  if (i >= n) throw ShapeError("slice index out of range on axis 0 of " + shape_str(shape_));
  const std::size_t stride = data_.size() / n;
  return std::span<const double>(data_).subspan(i * stride, stride);
}

std::span<double> Tensor::row0(std::size_t i) {
  const std::size_t n = shape_.empty() ? 0 : shape_[0];
  if (i >= n) throw ShapeError("slice index out of range on axis 0 of " + shape_str(shape_));
  const std::size_t stride = data_.size() / n;
  return std::span<double>(data_).subspan(i * stride, stride);
}

Tensor Tensor::slice0(std::size_t i) const {
  auto row = row0(i);
  Shape s = shape_;
  s[0] = 1;
  return Tensor(std::move(s), std::vector<double>(row.begin(), row.end()));
}

void Tensor::set_slice0(std::size_t i, const Tensor& src) {
  auto row = row0(i);
  if (src.size() != row.size()) {
    throw ShapeError("slice of " + shape_str(src.shape()) + " does not fit " + shape_str(shape_));
  }
  std::copy(src.data().begin(), src.data().end(), row.begin());
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

Tensor axpby(double a, const Tensor& x, double b, const Tensor& y) {
  require_same_shape(x, y, "axpby");
  Tensor out(x.shape());
  const auto xs = x.data();
  const auto ys = y.data();
  auto os = out.data();
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static) if (n > 65536)
  for (std::ptrdiff_t i = 0; i < n; ++i) os[i] = a * xs[i] + b * ys[i];
  return out;
}

Tensor scaled(const Tensor& x, double a) {
  Tensor out = x;
  for (double& v : out.data()) v *= a;
  return out;
}

Tensor operator+(const Tensor& x, const Tensor& y) {
  require_same_shape(x, y, "add");
  Tensor out = x;
  auto os = out.data();
  const auto ys = y.data();
  for (std::size_t i = 0; i < os.size(); ++i) os[i] += ys[i];
  return out;
}

Tensor operator-(const Tensor& x, const Tensor& y) {
  require_same_shape(x, y, "subtract");
  Tensor out = x;
  auto os = out.data();
  const auto ys = y.data();
  for (std::size_t i = 0; i < os.size(); ++i) os[i] -= ys[i];
  return out;
}

Tensor concat0(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat0 of zero tensors");
  Shape shape = parts.front().shape();
  if (shape.empty()) throw ShapeError("concat0 of rank-0 tensor");
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != shape.size() ||
        !std::equal(shape.begin() + 1, shape.end(), p.shape().begin() + 1)) {
      throw ShapeError("concat0: incompatible shapes " + shape_str(shape) + " and " +
                       shape_str(p.shape()));
    }
    total += p.shape()[0];
  }
  shape[0] = total;
  std::vector<double> data;
  data.reserve(shape_numel(shape));
  for (const Tensor& p : parts) data.insert(data.end(), p.data().begin(), p.data().end());
  return Tensor(std::move(shape), std::move(data));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  return a.same_shape(b) &&
         (a.size() == 0 || std::memcmp(a.data().data(), b.data().data(),
                                       a.size() * sizeof(double)) == 0);
}

bool all_finite(const Tensor& t) {
  return std::all_of(t.data().begin(), t.data().end(), [](double v) { return std::isfinite(v); });
}

namespace {

// Channel index of every flat offset, for the given channel axis.
struct ChannelWalk {
  std::size_t channels = 0;
  std::size_t inner = 1;  // product of axes after the channel axis
};

ChannelWalk check_axes(const Tensor& x, std::size_t channel_axis,
                       std::span<const std::size_t> reduce_axes) {
  if (reduce_axes.empty()) throw Error("degenerate reduction: no reduce axes");
  if (channel_axis >= x.rank()) {
    throw ShapeError("channel axis " + std::to_string(channel_axis) + " out of range for " +
                     shape_str(x.shape()));
  }
  std::vector<bool> reduced(x.rank(), false);
  for (std::size_t a : reduce_axes) {
    if (a >= x.rank()) throw ShapeError("reduce axis out of range for " + shape_str(x.shape()));
    if (a == channel_axis) throw Error("reduce axes must not contain the channel axis");
    reduced[a] = true;
  }
  std::size_t count = 1;
  for (std::size_t a = 0; a < x.rank(); ++a) {
    if (a == channel_axis) continue;
    if (!reduced[a]) {
      throw ShapeError("axis " + std::to_string(a) + " is neither reduced nor the channel axis");
    }
    count *= x.shape()[a];
  }
  if (count == 0) throw Error("degenerate reduction: empty reduce extent");
  ChannelWalk w;
  w.channels = x.shape()[channel_axis];
  for (std::size_t a = channel_axis + 1; a < x.rank(); ++a) w.inner *= x.shape()[a];
  return w;
}

}  // namespace

Moments channel_moments(const Tensor& x, std::size_t channel_axis,
                        std::span<const std::size_t> reduce_axes) {
  const ChannelWalk w = check_axes(x, channel_axis, reduce_axes);
  const std::size_t per_channel = x.size() / w.channels;
  std::vector<double> sum(w.channels, 0.0);
  const auto xs = x.data();
  for (std::size_t i = 0; i < xs.size(); ++i) sum[(i / w.inner) % w.channels] += xs[i];
  Moments m;
  m.mean.resize(w.channels);
  for (std::size_t c = 0; c < w.channels; ++c) m.mean[c] = sum[c] / static_cast<double>(per_channel);
  std::vector<double> sq(w.channels, 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::size_t c = (i / w.inner) % w.channels;
    const double d = xs[i] - m.mean[c];
    sq[c] += d * d;
  }
  m.std.resize(w.channels);
  for (std::size_t c = 0; c < w.channels; ++c) {
    m.std[c] = std::sqrt(sq[c] / static_cast<double>(per_channel));
  }
  return m;
}

Moments channel_moments(const Tensor& x, std::size_t channel_axis,
                        std::initializer_list<std::size_t> reduce_axes) {
  return channel_moments(x, channel_axis,
                         std::span<const std::size_t>(reduce_axes.begin(), reduce_axes.size()));
}

Tensor adain(const Tensor& x, const Tensor& y, std::size_t channel_axis,
             std::span<const std::size_t> reduce_axes, double eps) {
  if (!(eps > 0.0)) throw Error("adain: eps must be positive");
  if (x.rank() != y.rank()) {
    throw ShapeError("adain: rank mismatch " + shape_str(x.shape()) + " vs " +
                     shape_str(y.shape()));
  }
  const Moments mx = channel_moments(x, channel_axis, reduce_axes);
  const Moments my = channel_moments(y, channel_axis, reduce_axes);
  if (mx.mean.size() != my.mean.size()) {
    throw ShapeError("adain: channel mismatch " + std::to_string(mx.mean.size()) + " vs " +
                     std::to_string(my.mean.size()));
  }
  const std::size_t channels = mx.mean.size();
  std::vector<double> gain(channels);
  for (std::size_t c = 0; c < channels; ++c) gain[c] = my.std[c] / std::max(mx.std[c], eps);

  std::size_t inner = 1;
  for (std::size_t a = channel_axis + 1; a < x.rank(); ++a) inner *= x.shape()[a];
  Tensor out(x.shape());
  const auto xs = x.data();
  auto os = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::size_t c = (i / inner) % channels;
    os[i] = gain[c] * (xs[i] - mx.mean[c]) + my.mean[c];
  }
  return out;
}

Tensor adain(const Tensor& x, const Tensor& y, std::size_t channel_axis,
             std::initializer_list<std::size_t> reduce_axes, double eps) {
  return adain(x, y, channel_axis,
               std::span<const std::size_t>(reduce_axes.begin(), reduce_axes.size()), eps);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine_similarity: length mismatch");
  double dot = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  const double na = std::sqrt(aa);
  const double nb = std::sqrt(bb);
  if (na < kCosineZeroNorm || nb < kCosineZeroNorm) return 0.0;
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

void bilinear_sample(const Tensor& img, double x, double y, std::span<double> out) {
  if (img.rank() != 3) throw ShapeError("bilinear_sample expects H x W x C, got " +
                                        shape_str(img.shape()));
  const std::size_t h = img.shape()[0];
  const std::size_t w = img.shape()[1];
  const std::size_t c = img.shape()[2];
  if (h == 0 || w == 0) throw ShapeError("bilinear_sample on empty image");
  if (out.size() != c) throw ShapeError("bilinear_sample: output length != channels");

  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const std::size_t x0 = static_cast<std::size_t>(std::floor(x));
  const std::size_t y0 = static_cast<std::size_t>(std::floor(y));
  const std::size_t x1 = std::min(x0 + 1, w - 1);
  const std::size_t y1 = std::min(y0 + 1, h - 1);
  const double fx = x - static_cast<double>(x0);
  const double fy = y - static_cast<double>(y0);

  const auto d = img.data();
  const double* p00 = &d[(y0 * w + x0) * c];
  const double* p01 = &d[(y0 * w + x1) * c];
  const double* p10 = &d[(y1 * w + x0) * c];
  const double* p11 = &d[(y1 * w + x1) * c];
  for (std::size_t k = 0; k < c; ++k) {
    const double top = (1.0 - fx) * p00[k] + fx * p01[k];
    const double bot = (1.0 - fx) * p10[k] + fx * p11[k];
    out[k] = (1.0 - fy) * top + fy * bot;
  }
}

std::vector<double> bilinear_sample(const Tensor& img, double x, double y) {
  std::vector<double> out(img.rank() == 3 ? img.shape()[2] : 0);
  bilinear_sample(img, x, y, out);
  return out;
}

}  // namespace vidstyle
