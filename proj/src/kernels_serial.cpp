// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <numeric>
#include <vector>

#include "kernels_detail.hpp"
#include "vidstyle/error.hpp"

namespace vidstyle::kernels::serial {

void knn_label_queries(std::span<const double> queries, const AnchorView& anchors, std::size_t k,
                       std::span<std::uint8_t> out) {
  const std::size_t dim = anchors.dim;
  const std::size_t na = anchors.count();
  if (dim == 0 || queries.size() % dim != 0) throw ShapeError("knn: query length not a multiple of dim");
  if (na == 0) throw Error("knn: empty anchor set");
  if (k == 0) throw Error("knn: k must be >= 1");
  const std::size_t nq = queries.size() / dim;
  if (out.size() != nq) throw ShapeError("knn: output length mismatch");
  const std::size_t kk = std::min(k, na);

  std::vector<double> sims(na);
  std::vector<std::size_t> order(na);
  for (std::size_t qi = 0; qi < nq; ++qi) {
    const auto q = queries.subspan(qi * dim, dim);
    for (std::size_t ai = 0; ai < na; ++ai) {
      sims[ai] = cosine_similarity(q, anchors.features.subspan(ai * dim, dim));
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk), order.end(),
                      [&](std::size_t x, std::size_t y) {
                        return sims[x] > sims[y] || (sims[x] == sims[y] && x < y);
                      });
    std::size_t fg = 0;
    for (std::size_t j = 0; j < kk; ++j) fg += anchors.labels[order[j]] ? 1 : 0;
    out[qi] = 2 * fg > kk ? 1 : 0;
  }
}

void warp_frame(const Tensor& a, const Tensor& b, const FlowField& flow, Tensor& out) {
  detail::check_warp_args(a, b, flow, out);
  for (std::size_t y = 0; y < a.shape()[0]; ++y) detail::warp_row(a, b, flow, out, y);
}

void hs_sweep(std::size_t height, std::size_t width, std::span<const double> ix,
              std::span<const double> iy, std::span<const double> c, double alpha2,
              std::span<const double> u_in, std::span<const double> v_in, std::span<double> u_out,
              std::span<double> v_out) {
  for (std::size_t y = 0; y < height; ++y) {
    detail::hs_row(height, width, ix, iy, c, alpha2, u_in, v_in, u_out, v_out, y);
  }
}

}  // namespace vidstyle::kernels::serial
