// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "vidstyle/flow_field.hpp"
#include "vidstyle/tensor.hpp"

// Hot loops of mask propagation and flow smoothing. The functions in
// vidstyle::kernels are OpenMP-parallel; vidstyle::kernels::serial holds the
// plain reference versions used by tests and the benchmark. Both produce
// bitwise-identical results for any thread count.
namespace vidstyle::kernels {

/// Anchor points for kNN voting: `count` rows of `dim` features, their
/// labels and their Euclidean norms.
struct AnchorView {
  std::span<const double> features;
  std::span<const double> norms;
  std::span<const std::uint8_t> labels;
  std::size_t dim = 0;

  std::size_t count() const noexcept { return labels.size(); }
};

/// Euclidean norm of every row, accumulated in index order.
void row_norms(std::span<const double> rows, std::size_t dim, std::span<double> out);

/// Labels every query row by majority vote of its k most cosine-similar
/// anchors (k clamped to the anchor count). Equal similarities rank by anchor
/// position; a tied vote is background.
void knn_label_queries(std::span<const double> queries, const AnchorView& anchors, std::size_t k,
                       std::span<std::uint8_t> out);

/// out(x) = b(x + flow(x)) bilinearly, or a(x) where flow.occluded(x).
/// a, b, out are H x W x C.
void warp_frame(const Tensor& a, const Tensor& b, const FlowField& flow, Tensor& out);

/// One Jacobi sweep of the Horn-Schunck system linearised around the
/// current flow:  data residual = ix * u + iy * v + c.
void hs_sweep(std::size_t height, std::size_t width, std::span<const double> ix,
              std::span<const double> iy, std::span<const double> c, double alpha2,
              std::span<const double> u_in, std::span<const double> v_in, std::span<double> u_out,
              std::span<double> v_out);

namespace serial {

void knn_label_queries(std::span<const double> queries, const AnchorView& anchors, std::size_t k,
                       std::span<std::uint8_t> out);
void warp_frame(const Tensor& a, const Tensor& b, const FlowField& flow, Tensor& out);
void hs_sweep(std::size_t height, std::size_t width, std::span<const double> ix,
              std::span<const double> iy, std::span<const double> c, double alpha2,
              std::span<const double> u_in, std::span<const double> v_in, std::span<double> u_out,
              std::span<double> v_out);

}  // namespace serial

/// Number of OpenMP worker threads currently configured (1 without OpenMP).
int max_threads();
void set_threads(int n);

}  // namespace vidstyle::kernels
