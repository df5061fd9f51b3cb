// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "kernels_detail.hpp"
#include "vidstyle/error.hpp"

namespace vidstyle::kernels {

int max_threads() { return omp_get_max_threads(); }

void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

void row_norms(std::span<const double> rows, std::size_t dim, std::span<double> out) {
  const std::size_t n = dim ? rows.size() / dim : 0;
  if (out.size() != n) throw ShapeError("row_norms: output length mismatch");
  for (std::size_t r = 0; r < n; ++r) {
    const double* p = rows.data() + r * dim;
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) s += p[j] * p[j];
    out[r] = std::sqrt(s);
  }
}

void knn_label_queries(std::span<const double> queries, const AnchorView& anchors, std::size_t k,
                       std::span<std::uint8_t> out) {
  const std::size_t dim = anchors.dim;
  const std::size_t na = anchors.count();
  if (dim == 0 || queries.size() % dim != 0) throw ShapeError("knn: query length not a multiple of dim");
  if (na == 0) throw Error("knn: empty anchor set");
  if (k == 0) throw Error("knn: k must be >= 1");
  if (anchors.features.size() != na * dim || anchors.norms.size() != na) {
    throw ShapeError("knn: anchor arrays disagree");
  }
  const std::size_t nq = queries.size() / dim;
  if (out.size() != nq) throw ShapeError("knn: output length mismatch");
  const std::size_t kk = std::min(k, na);
  const double* af = anchors.features.data();
  const double* an = anchors.norms.data();
  const std::uint8_t* al = anchors.labels.data();

#pragma omp parallel
  {
    std::vector<double> best_sim(kk);
    std::vector<std::uint8_t> best_lab(kk);
#pragma omp for schedule(static)
    for (std::ptrdiff_t qi = 0; qi < static_cast<std::ptrdiff_t>(nq); ++qi) {
      const double* q = queries.data() + static_cast<std::size_t>(qi) * dim;
      double qq = 0.0;
      for (std::size_t j = 0; j < dim; ++j) qq += q[j] * q[j];
      const double qn = std::sqrt(qq);
      std::size_t filled = 0;
      for (std::size_t ai = 0; ai < na; ++ai) {
        const double* a = af + ai * dim;
        double dot = 0.0;
        for (std::size_t j = 0; j < dim; ++j) dot += q[j] * a[j];
        const double sim = (qn < kCosineZeroNorm || an[ai] < kCosineZeroNorm)
                               ? 0.0
                               : std::clamp(dot / (qn * an[ai]), -1.0, 1.0);
        if (filled == kk && !(sim > best_sim[kk - 1])) continue;
        // Insert after every entry with similarity >= sim, so earlier anchors win ties.
        std::size_t pos = filled < kk ? filled : kk - 1;
        while (pos > 0 && best_sim[pos - 1] < sim) {
          best_sim[pos] = best_sim[pos - 1];
          best_lab[pos] = best_lab[pos - 1];
          --pos;
        }
        best_sim[pos] = sim;
        best_lab[pos] = al[ai];
        if (filled < kk) ++filled;
      }
      std::size_t fg = 0;
      for (std::size_t j = 0; j < kk; ++j) fg += best_lab[j] ? 1 : 0;
      out[static_cast<std::size_t>(qi)] = 2 * fg > kk ? 1 : 0;
    }
  }
}

void warp_frame(const Tensor& a, const Tensor& b, const FlowField& flow, Tensor& out) {
  detail::check_warp_args(a, b, flow, out);
  const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(a.shape()[0]);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t y = 0; y < h; ++y) detail::warp_row(a, b, flow, out, static_cast<std::size_t>(y));
}

void hs_sweep(std::size_t height, std::size_t width, std::span<const double> ix,
              std::span<const double> iy, std::span<const double> c, double alpha2,
              std::span<const double> u_in, std::span<const double> v_in, std::span<double> u_out,
              std::span<double> v_out) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t y = 0; y < static_cast<std::ptrdiff_t>(height); ++y) {
    detail::hs_row(height, width, ix, iy, c, alpha2, u_in, v_in, u_out, v_out,
                   static_cast<std::size_t>(y));
  }
}

}  // namespace vidstyle::kernels
