// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace vidstyle {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major tensor of doubles.
///
/// Latent videos are rank 4 (frames x channels x height x width), pixel videos
/// are rank 4 channels-last (frames x height x width x channels), attention
/// operands are rank 4 (frames x heads x tokens x dim).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Bounds-checked multi-index access.
  double& at(std::initializer_list<std::size_t> index);
  double at(std::initializer_list<std::size_t> index) const;

  /// Flat offset of a multi-index; throws on rank or bounds mismatch.
  std::size_t offset(std::initializer_list<std::size_t> index) const;

  Tensor reshaped(Shape shape) const;

  /// Sub-tensor i along axis 0, keeping a leading axis of length 1.
  Tensor slice0(std::size_t i) const;
  /// Contiguous view of sub-tensor i along axis 0.
  std::span<const double> row0(std::size_t i) const;
  std::span<double> row0(std::size_t i);
  void set_slice0(std::size_t i, const Tensor& src);

  bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }

 private:
  Shape shape_;
  std::vector<double> data_;
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

/// out = a*x + b*y, elementwise.
Tensor axpby(double a, const Tensor& x, double b, const Tensor& y);
Tensor scaled(const Tensor& x, double a);
Tensor operator+(const Tensor& x, const Tensor& y);
Tensor operator-(const Tensor& x, const Tensor& y);

/// Concatenate along axis 0; all other axes must agree.
Tensor concat0(std::span<const Tensor> parts);

double max_abs_diff(const Tensor& a, const Tensor& b);
bool bitwise_equal(const Tensor& a, const Tensor& b);
bool all_finite(const Tensor& t);

/// Per-channel population statistics (ddof = 0).
struct Moments {
  std::vector<double> mean;
  std::vector<double> std;
};

/// Mean and population standard deviation of every index along
/// `channel_axis`, reduced over `reduce_axes`. Every axis must be either the
/// channel axis or reduced.
Moments channel_moments(const Tensor& x, std::size_t channel_axis,
                        std::span<const std::size_t> reduce_axes);
Moments channel_moments(const Tensor& x, std::size_t channel_axis,
                        std::initializer_list<std::size_t> reduce_axes);

inline constexpr double kAdainEps = 1e-5;

/// Adaptive instance normalisation: renormalise x so that each channel has
/// the mean and standard deviation of the same channel of y.
///
///   out = sigma(y) * (x - mu(x)) / max(sigma(x), eps) + mu(y)
///
/// sigma(x) is floored at eps, so a constant channel collapses to mu(y).
/// x and y must have the same rank and channel count; the reduced extents
/// may differ.
Tensor adain(const Tensor& x, const Tensor& y, std::size_t channel_axis,
             std::span<const std::size_t> reduce_axes, double eps = kAdainEps);
Tensor adain(const Tensor& x, const Tensor& y, std::size_t channel_axis,
             std::initializer_list<std::size_t> reduce_axes, double eps = kAdainEps);

inline constexpr double kCosineZeroNorm = 1e-12;

/// a.b / (|a||b|); 0 when either norm is below 1e-12.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Bilinear interpolation in an H x W x C image at continuous (x, y).
/// Coordinates outside the image are clamped to the border.
void bilinear_sample(const Tensor& img, double x, double y, std::span<double> out);
std::vector<double> bilinear_sample(const Tensor& img, double x, double y);

}  // namespace vidstyle
