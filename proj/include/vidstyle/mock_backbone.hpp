// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "vidstyle/backbone.hpp"

namespace vidstyle {

struct MockBackboneParams {
  std::size_t channels = 4;
  std::size_t model_dim = 8;
  std::size_t heads = 2;
  std::size_t layers = 2;
  /// Side of the square pooling block that turns latent pixels into tokens.
  std::size_t pool = 4;
  /// eps = sqrt(1 - alpha_bar_t) * z + token_gain * (token path upsampled),
  /// with alpha_bar from the Stable Diffusion training schedule. The skip term
  /// is the ideal prediction for unit-variance data.
  double token_gain = 0.5;
  std::uint64_t seed = 0;
};

/// Small deterministic transformer standing in for a denoising U-Net.
///
/// Latent pixels are average-pooled into tokens, embedded with a seeded
/// linear map plus a timestep code, passed through `layers` residual blocks
/// of multi-head cross-frame attention (seeded linear Q/K/V/out projections,
/// softmax), and projected back to the latent channels. The hidden tokens
/// after the last block are the exposed feature map.
class MockBackbone final : public AttentionBackbone {
 public:
  explicit MockBackbone(MockBackboneParams params);

  /// Pool size giving a token grid of at most 16 x 16 for the given latent.
  static std::size_t pool_for(std::size_t height, std::size_t width);

  std::size_t attention_layers() const override { return params_.layers; }
  std::vector<std::size_t> up_block_layers() const override;

  Tensor predict_hooked(const Tensor& z, int timestep, const Conditioning& cond,
                        AttentionHook* hook) override;

  bool has_feature_hook() const override { return true; }
  std::pair<Tensor, Tensor> predict_with_features(const Tensor& z, int timestep,
                                                  const Conditioning& cond) override;

  const MockBackboneParams& params() const noexcept { return params_; }

 private:
  std::pair<Tensor, Tensor> forward(const Tensor& z, int timestep, AttentionHook* hook);

  MockBackboneParams params_;
  std::vector<double> w_in_;   // channels x model_dim
  std::vector<double> w_out_;  // model_dim x channels
  std::vector<double> t_freq_, t_phase_;
  struct Layer {
    std::vector<double> wq, wk, wv, wo;  // model_dim x model_dim
  };
  std::vector<Layer> blocks_;
};

}  // namespace vidstyle
