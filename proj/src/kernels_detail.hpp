// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

// Per-element bodies shared by the parallel and serial kernels.

#pragma once

#include <algorithm>
#include <cstddef>

#include "vidstyle/error.hpp"
#include "vidstyle/kernels.hpp"

namespace vidstyle::kernels::detail {

inline void check_warp_args(const Tensor& a, const Tensor& b, const FlowField& flow, Tensor& out) {
  if (a.rank() != 3 || !a.same_shape(b)) {
    throw ShapeError("warp: frames must share an H x W x C shape, got " + shape_str(a.shape()) +
                     " and " + shape_str(b.shape()));
  }
  if (flow.height != a.shape()[0] || flow.width != a.shape()[1] ||
      flow.u.size() != flow.pixels() || flow.v.size() != flow.pixels() ||
      flow.occluded.size() != flow.pixels()) {
    throw ShapeError("warp: flow field does not match frame size");
  }
  if (!out.same_shape(a)) out = Tensor(a.shape());
}

inline void warp_row(const Tensor& a, const Tensor& b, const FlowField& flow, Tensor& out,
                     std::size_t y) {
  const std::size_t w = a.shape()[1];
  const std::size_t c = a.shape()[2];
  const auto ad = a.data();
  auto od = out.data();
  for (std::size_t x = 0; x < w; ++x) {
    const std::size_t i = y * w + x;
    auto dst = od.subspan(i * c, c);
    if (flow.occluded[i]) {
      for (std::size_t k = 0; k < c; ++k) dst[k] = ad[i * c + k];
    } else {
      bilinear_sample(b, static_cast<double>(x) + flow.u[i], static_cast<double>(y) + flow.v[i], dst);
    }
  }
}

// Horn-Schunck neighbourhood average with replicated borders.
inline double hs_average(std::span<const double> f, std::size_t h, std::size_t w, std::size_t y,
                         std::size_t x) {
  const std::size_t ym = y > 0 ? y - 1 : 0;
  const std::size_t yp = y + 1 < h ? y + 1 : h - 1;
  const std::size_t xm = x > 0 ? x - 1 : 0;
  const std::size_t xp = x + 1 < w ? x + 1 : w - 1;
  const double edge = f[ym * w + x] + f[yp * w + x] + f[y * w + xm] + f[y * w + xp];
  const double corner = f[ym * w + xm] + f[ym * w + xp] + f[yp * w + xm] + f[yp * w + xp];
  return edge / 6.0 + corner / 12.0;
}

inline void hs_row(std::size_t h, std::size_t w, std::span<const double> ix,
                   std::span<const double> iy, std::span<const double> c, double alpha2,
                   std::span<const double> u_in, std::span<const double> v_in,
                   std::span<double> u_out, std::span<double> v_out, std::size_t y) {
  for (std::size_t x = 0; x < w; ++x) {
    const std::size_t i = y * w + x;
    const double ubar = hs_average(u_in, h, w, y, x);
    const double vbar = hs_average(v_in, h, w, y, x);
    const double t = (ix[i] * ubar + iy[i] * vbar + c[i]) / (alpha2 + ix[i] * ix[i] + iy[i] * iy[i]);
    u_out[i] = ubar - ix[i] * t;
    v_out[i] = vbar - iy[i] * t;
  }
}

}  // namespace vidstyle::kernels::detail
