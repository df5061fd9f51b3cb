// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "vidstyle/scheduler.hpp"
#include "vidstyle/tensor.hpp"

namespace vidstyle {

/// Projected self-attention operands of one branch at one layer, each
/// frames x heads x tokens x dim. k and v may carry a different token count
/// than q.
struct AttentionPacket {
  Tensor q, k, v;
};

/// Called by a backbone after the Q/K/V projections of every attention layer
/// and before cross-frame restructuring; the returned packet replaces the
/// projections.
class AttentionHook {
 public:
  virtual ~AttentionHook() = default;
  virtual AttentionPacket on_attention(std::size_t layer, const AttentionPacket& pkt) = 0;
};

/// Noise predictor whose self-attention layers can be observed and edited.
class AttentionBackbone : public NoisePredictor {
 public:
  virtual std::size_t attention_layers() const = 0;
  /// Self-attention layers of the up-sampling half; the default hook set.
  virtual std::vector<std::size_t> up_block_layers() const = 0;

  virtual Tensor predict_hooked(const Tensor& z, int timestep, const Conditioning& cond,
                                AttentionHook* hook) = 0;

  Tensor predict(const Tensor& z, int timestep, const Conditioning& cond) override {
    return predict_hooked(z, timestep, cond, nullptr);
  }
};

/// Single-frame view for frame i (0-based): q of frame i, and k / v built
/// from the tokens of frame 0 followed by frame i - 1. Frame 0 attends to
/// itself only.
AttentionPacket cross_frame_restructure(const AttentionPacket& pkt, std::size_t frame);

/// softmax(q k^T / sqrt(dim)) v for every head of a single-frame packet.
/// Returns 1 x heads x tokens_q x dim.
Tensor scaled_dot_attention(const AttentionPacket& frame_pkt);

}  // namespace vidstyle
