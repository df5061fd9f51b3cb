// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "vidstyle/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vidstyle/error.hpp"

namespace vidstyle {

namespace {

// Tokens of frame f as a heads x tokens x dim block.
std::span<const double> frame_block(const Tensor& t, std::size_t f) { return t.row0(f); }

}  // namespace

AttentionPacket cross_frame_restructure(const AttentionPacket& pkt, std::size_t frame) {
  if (pkt.q.rank() != 4 || pkt.k.rank() != 4 || pkt.v.rank() != 4 || !pkt.k.same_shape(pkt.v)) {
    throw ShapeError("cross_frame_restructure: packet must hold rank-4 q, k, v with k, v alike");
  }
  const std::size_t frames = pkt.k.shape()[0];
  if (frame >= frames || frame >= pkt.q.shape()[0]) {
    throw ShapeError("cross_frame_restructure: frame " + std::to_string(frame) + " out of range");
  }
  const std::size_t heads = pkt.k.shape()[1], tokens = pkt.k.shape()[2], dim = pkt.k.shape()[3];

  AttentionPacket out;
  out.q = pkt.q.slice0(frame);
  if (frame == 0) {
    out.k = pkt.k.slice0(0);
    out.v = pkt.v.slice0(0);
    return out;
  }
  auto join = [&](const Tensor& src) {
    Tensor t({1, heads, 2 * tokens, dim});
    const auto a = frame_block(src, 0);
    const auto b = frame_block(src, frame - 1);
    auto dst = t.data();
    const std::size_t blk = tokens * dim;
    for (std::size_t h = 0; h < heads; ++h) {
      std::copy_n(a.begin() + static_cast<std::ptrdiff_t>(h * blk), blk,
                  dst.begin() + static_cast<std::ptrdiff_t>(2 * h * blk));
      std::copy_n(b.begin() + static_cast<std::ptrdiff_t>(h * blk), blk,
                  dst.begin() + static_cast<std::ptrdiff_t>((2 * h + 1) * blk));
    }
    return t;
  };
  out.k = join(pkt.k);
  out.v = join(pkt.v);
  return out;
}

Tensor scaled_dot_attention(const AttentionPacket& p) {
  if (p.q.rank() != 4 || p.k.rank() != 4 || !p.k.same_shape(p.v) || p.q.shape()[0] != 1 ||
      p.k.shape()[0] != 1 || p.q.shape()[1] != p.k.shape()[1] || p.q.shape()[3] != p.k.shape()[3]) {
    throw ShapeError("attention: incompatible operands q " + shape_str(p.q.shape()) + ", k " +
                     shape_str(p.k.shape()) + ", v " + shape_str(p.v.shape()));
  }
  const std::size_t heads = p.q.shape()[1], nq = p.q.shape()[2], nk = p.k.shape()[2];
  const std::size_t dim = p.q.shape()[3];
  if (nk == 0) throw ShapeError("attention: no keys");
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  Tensor out({1, heads, nq, dim});
  std::vector<double> w(nk);
  for (std::size_t h = 0; h < heads; ++h) {
    const double* q = p.q.data().data() + h * nq * dim;
    const double* k = p.k.data().data() + h * nk * dim;
    const double* v = p.v.data().data() + h * nk * dim;
    double* o = out.data().data() + h * nq * dim;
    for (std::size_t i = 0; i < nq; ++i) {
      double top = -INFINITY;
      for (std::size_t j = 0; j < nk; ++j) {
        double s = 0.0;
        for (std::size_t d = 0; d < dim; ++d) s += q[i * dim + d] * k[j * dim + d];
        w[j] = s * scale;
        top = std::max(top, w[j]);
      }
      double total = 0.0;
      for (std::size_t j = 0; j < nk; ++j) {
        w[j] = std::exp(w[j] - top);
        total += w[j];
      }
      double* oi = o + i * dim;
      std::fill(oi, oi + dim, 0.0);
      for (std::size_t j = 0; j < nk; ++j) {
        const double* vj = v + j * dim;
        for (std::size_t d = 0; d < dim; ++d) oi[d] += w[j] * vj[d];
      }
      for (std::size_t d = 0; d < dim; ++d) oi[d] /= total;
    }
  }
  return out;
}

}  // namespace vidstyle
