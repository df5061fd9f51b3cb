// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "vidstyle/mask_propagation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "vidstyle/error.hpp"
#include "vidstyle/kernels.hpp"

namespace vidstyle {

namespace {

std::size_t round_half_up(double v) { return static_cast<std::size_t>(std::floor(v + 0.5)); }

// Partial Fisher-Yates: the first `take` entries become a uniform sample.
void sample_without_replacement(std::vector<std::size_t>& pool, std::size_t take, CounterRng& rng) {
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  std::sort(pool.begin(), pool.end());
}

void check_params(const PropagationParams& p) {
  if (!(p.r > 0.0 && p.r <= 1.0)) throw Error("propagate: r must be in (0, 1]");
  if (p.k < 1) throw Error("propagate: k must be >= 1");
  if (p.n < 0) throw Error("propagate: n must be >= 0");
}

AnchorSet sample_frame(const Tensor& features, std::size_t frame, const Mask& mask,
                       const PropagationParams& params) {
  CounterRng rng = CounterRng::stream(params.seed, "mask.sample", frame);
  const std::vector<std::size_t> idx = stratified_sample(mask, params.r, rng);
  const std::size_t dim = features.shape()[3];
  const auto rows = features.row0(frame);
  AnchorSet set;
  set.dim = dim;
  set.features.reserve(idx.size() * dim);
  set.labels.reserve(idx.size());
  for (std::size_t i : idx) {
    const auto row = rows.subspan(i * dim, dim);
    set.features.insert(set.features.end(), row.begin(), row.end());
    set.labels.push_back(mask.values[i]);
  }
  return set;
}

using LabelKernel = void (*)(std::span<const double>, const kernels::AnchorView&, std::size_t,
                             std::span<std::uint8_t>);

MaskSequence propagate_with(const Tensor& features, const Mask& first,
                            const PropagationParams& params, LabelKernel label) {
  check_params(params);
  if (features.rank() != 4 || features.shape()[0] == 0) {
    throw ShapeError("propagate: features must be frames x h x w x d, got " +
                     shape_str(features.shape()));
  }
  const std::size_t frames = features.shape()[0];
  const std::size_t h = features.shape()[1];
  const std::size_t w = features.shape()[2];
  if (first.height != h || first.width != w || first.values.size() != h * w) {
    throw ShapeError("propagate: mask " + std::to_string(first.height) + "x" +
                     std::to_string(first.width) + " does not match feature grid " +
                     std::to_string(h) + "x" + std::to_string(w));
  }
  if (features.shape()[3] == 0) throw ShapeError("propagate: zero feature dimension");

  MaskSequence masks;
  masks.reserve(frames);
  masks.push_back(first);
  AnchorBuffer buffer(static_cast<std::size_t>(params.n));
  buffer.pin_first(sample_frame(features, 0, first, params));

  std::vector<double> norms;
  for (std::size_t i = 1; i < frames; ++i) {
    const AnchorSet anchors = buffer.gather();
    norms.resize(anchors.size());
    kernels::row_norms(anchors.features, anchors.dim, norms);
    const kernels::AnchorView view{anchors.features, norms, anchors.labels, anchors.dim};
    Mask m = Mask::filled(h, w, 0);
    label(features.row0(i), view, static_cast<std::size_t>(params.k), m.values);
    buffer.push(sample_frame(features, i, m, params));
    masks.push_back(std::move(m));
  }
  return masks;
}

}  // namespace

std::vector<std::size_t> stratified_sample(const Mask& mask, double r, CounterRng& rng) {
  if (!(r > 0.0 && r <= 1.0)) throw Error("stratified_sample: r must be in (0, 1]");
  const std::size_t total_px = mask.pixels();
  if (total_px == 0 || mask.values.size() != total_px) throw Error("stratified_sample: empty grid");

  std::vector<std::size_t> fg, bg;
  for (std::size_t i = 0; i < total_px; ++i) (mask.values[i] ? fg : bg).push_back(i);

  const std::size_t budget = std::max<std::size_t>(1, round_half_up(r * static_cast<double>(total_px)));
  std::size_t n_fg = round_half_up(static_cast<double>(budget) * static_cast<double>(fg.size()) /
                                   static_cast<double>(total_px));
  if (!fg.empty()) n_fg = std::max<std::size_t>(n_fg, 1);
  n_fg = std::min(n_fg, fg.size());
  std::size_t n_bg = std::min(budget - std::min(budget, n_fg), bg.size());
  if (n_fg + n_bg < budget) n_fg = std::min(fg.size(), budget - n_bg);

  sample_without_replacement(fg, n_fg, rng);
  sample_without_replacement(bg, n_bg, rng);
  fg.insert(fg.end(), bg.begin(), bg.end());
  return fg;
}

void AnchorSet::append(const AnchorSet& other) {
  if (other.size() == 0) return;
  if (dim == 0) dim = other.dim;
  if (other.dim != dim) throw ShapeError("anchor sets disagree on feature dimension");
  features.insert(features.end(), other.features.begin(), other.features.end());
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
}

void AnchorBuffer::push(AnchorSet frame) {
  if (capacity_ == 0) return;
  if (previous_.size() == capacity_) previous_.pop_front();
  previous_.push_back(std::move(frame));
}

AnchorSet AnchorBuffer::gather() const {
  AnchorSet all;
  for (const AnchorSet& s : previous_) all.append(s);
  if (first_) all.append(*first_);
  return all;
}

std::uint8_t knn_label(std::span<const double> query, const AnchorSet& anchors, std::size_t k) {
  if (anchors.size() == 0) throw Error("knn_label: no anchors");
  if (query.size() != anchors.dim) throw ShapeError("knn_label: query dimension mismatch");
  std::vector<double> norms(anchors.size());
  kernels::row_norms(anchors.features, anchors.dim, norms);
  std::uint8_t out = 0;
  kernels::serial::knn_label_queries(query, {anchors.features, norms, anchors.labels, anchors.dim},
                                     k, std::span<std::uint8_t>(&out, 1));
  return out;
}

MaskSequence propagate(const Tensor& features, const Mask& first, const PropagationParams& params) {
  return propagate_with(features, first, params, &kernels::knn_label_queries);
}

MaskSequence propagate_serial(const Tensor& features, const Mask& first,
                              const PropagationParams& params) {
  return propagate_with(features, first, params, &kernels::serial::knn_label_queries);
}

Mask resize_nearest(const Mask& mask, std::size_t height, std::size_t width) {
  if (mask.pixels() == 0) throw ShapeError("resize_nearest: empty mask");
  Mask out = Mask::filled(height, width, 0);
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t sy = y * mask.height / height;
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t sx = x * mask.width / width;
      out.values[y * width + x] = mask.values[sy * mask.width + sx] ? 1 : 0;
    }
  }
  return out;
}

MaskSequence upsample_masks(const MaskSequence& masks, std::size_t height, std::size_t width) {
  MaskSequence out;
  out.reserve(masks.size());
  for (const Mask& m : masks) out.push_back(resize_nearest(m, height, width));
  return out;
}

MaskScores frame_scores(const Mask& pred, const Mask& gt) {
  if (pred.height != gt.height || pred.width != gt.width) {
    throw ShapeError("mask scores: size mismatch");
  }
  std::size_t inter = 0, uni = 0, np = 0, ng = 0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const bool p = pred.values[i] != 0;
    const bool g = gt.values[i] != 0;
    inter += p && g;
    uni += p || g;
    np += p;
    ng += g;
  }
  if (uni == 0) return {1.0, 1.0};
  return {static_cast<double>(inter) / static_cast<double>(uni),
          2.0 * static_cast<double>(inter) / static_cast<double>(np + ng)};
}

MaskScores iou_dice(const MaskSequence& pred, const MaskSequence& gt) {
  if (pred.size() != gt.size() || pred.empty()) {
    throw ShapeError("iou_dice: need equally many frames (" + std::to_string(pred.size()) + " vs " +
                     std::to_string(gt.size()) + ")");
  }
  MaskScores acc;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const MaskScores s = frame_scores(pred[i], gt[i]);
    acc.iou += s.iou;
    acc.dice += s.dice;
  }
  acc.iou /= static_cast<double>(pred.size());
  acc.dice /= static_cast<double>(pred.size());
  return acc;
}

}  // namespace vidstyle
