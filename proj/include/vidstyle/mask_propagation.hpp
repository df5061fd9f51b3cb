// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "vidstyle/mask.hpp"
#include "vidstyle/rng.hpp"
#include "vidstyle/tensor.hpp"

namespace vidstyle {

/// Propagation knobs: sampling rate r, k nearest anchors, n previous anchor
/// frames kept besides the pinned first frame.
struct PropagationParams {
  double r = 0.3;
  int k = 15;
  int n = 9;
  std::uint64_t seed = 0;
};

/// Down-samples the grid points of `mask`: a total budget of
/// round_half_up(r * pixels) split between foreground and background in
/// proportion to their areas, at least one foreground point whenever the
/// foreground is nonempty. Returns foreground indices (ascending) followed by
/// background indices (ascending).
std::vector<std::size_t> stratified_sample(const Mask& mask, double r, CounterRng& rng);

/// Sampled feature rows of one frame together with their labels.
struct AnchorSet {
  std::size_t dim = 0;
  std::vector<double> features;
  std::vector<std::uint8_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  void append(const AnchorSet& other);
};

/// Pinned first-frame anchors plus a FIFO of at most `capacity` previous
/// frames. gather() orders anchors oldest previous frame first and the first
/// frame last.
class AnchorBuffer {
 public:
  explicit AnchorBuffer(std::size_t capacity) : capacity_(capacity) {}

  void pin_first(AnchorSet first) { first_ = std::move(first); }
  /// Appends a frame, evicting the oldest when full. No-op when capacity is 0.
  void push(AnchorSet frame);
  AnchorSet gather() const;

  std::size_t previous_frames() const noexcept { return previous_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool has_first() const noexcept { return first_.has_value(); }

 private:
  std::size_t capacity_;
  std::optional<AnchorSet> first_;
  std::deque<AnchorSet> previous_;
};

/// Label of one query by majority vote of its k most cosine-similar anchors;
/// a tied vote is background.
std::uint8_t knn_label(std::span<const double> query, const AnchorSet& anchors, std::size_t k);

/// Propagates the first-frame mask through a frames x h x w x d feature
/// stack. Frame 0 is copied; frame i is labelled point by point against the
/// anchor buffer, then its own sampled points join the buffer.
MaskSequence propagate(const Tensor& features, const Mask& first, const PropagationParams& params);
/// Same algorithm on the serial reference kernel.
MaskSequence propagate_serial(const Tensor& features, const Mask& first,
                              const PropagationParams& params);

/// Nearest-neighbour resampling to height x width.
Mask resize_nearest(const Mask& mask, std::size_t height, std::size_t width);
MaskSequence upsample_masks(const MaskSequence& masks, std::size_t height, std::size_t width);

struct MaskScores {
  double iou = 0.0;
  double dice = 0.0;
};

/// IoU and Dice of one frame; both are 1 when prediction and truth are empty.
MaskScores frame_scores(const Mask& pred, const Mask& gt);
/// Frame-averaged IoU and Dice.
MaskScores iou_dice(const MaskSequence& pred, const MaskSequence& gt);

}  // namespace vidstyle
