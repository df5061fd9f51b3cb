// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>

#include "vidstyle/scheduler.hpp"

namespace vidstyle {

/// Returns the same noise for every input: either a fixed tensor (shape must
/// match z) or a scalar broadcast to z's shape.
class ConstantNoisePredictor final : public NoisePredictor {
 public:
  explicit ConstantNoisePredictor(double value) : value_(value) {}
  explicit ConstantNoisePredictor(Tensor eps) : eps_(std::move(eps)) {}

  Tensor predict(const Tensor& z, int timestep, const Conditioning& cond) override;

 private:
  double value_ = 0.0;
  std::optional<Tensor> eps_;
};

/// Pseudo-random noise that depends on (seed, timestep, shape) but not on z.
class SeededNoisePredictor final : public NoisePredictor {
 public:
  explicit SeededNoisePredictor(std::uint64_t seed) : seed_(seed) {}

  Tensor predict(const Tensor& z, int timestep, const Conditioning& cond) override;

 private:
  std::uint64_t seed_;
};

/// frames x C x H x W  <->  frames x H x W x C, no other change.
class IdentityCodec final : public LatentCodec {
 public:
  Tensor decode(const Tensor& latents) override;
  Tensor encode(const Tensor& pixels) override;
};

/// Per-pixel channel mixing by a seeded random orthogonal matrix Q:
/// decode p = Q z, encode z = Q^T p. Invertible up to rounding.
class OrthogonalCodec final : public LatentCodec {
 public:
  OrthogonalCodec(std::size_t channels, std::uint64_t seed);

  Tensor decode(const Tensor& latents) override;
  Tensor encode(const Tensor& pixels) override;

  const std::vector<double>& matrix() const noexcept { return q_; }

 private:
  std::size_t channels_;
  std::vector<double> q_;  // row-major channels x channels
};

/// Channels-first latent video to channels-last, and back.
Tensor to_channels_last(const Tensor& latents);
Tensor to_channels_first(const Tensor& pixels);

}  // namespace vidstyle
