// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "vidstyle/flow_field.hpp"
#include "vidstyle/scheduler.hpp"
#include "vidstyle/tensor.hpp"

namespace vidstyle {

/// Coarse-to-fine Horn-Schunck with warping. Intensities are the channel mean
/// scaled by `intensity_scale`; lambda is the squared smoothness weight.
struct HornSchunckParams {
  double lambda = 0.1;
  int iterations = 200;  // Jacobi sweeps per pyramid level
  int levels = 3;
  int warps = 2;         // re-linearisations per level; sweeps are split among them
  double intensity_scale = 1.0;
};

/// Flow from frame a to frame b (both H x W x C). Occlusion is left clear.
FlowField estimate_flow_hs(const Tensor& a, const Tensor& b, const HornSchunckParams& params = {});
/// Same estimator on the serial kernels.
FlowField estimate_flow_hs_serial(const Tensor& a, const Tensor& b,
                                  const HornSchunckParams& params = {});

/// Forward-backward consistency:
///   occluded(x) iff |f(x) + g(x + f(x))|^2 > 0.01 (|f(x)|^2 + |g(x + f(x))|^2) + 0.5
/// with g sampled bilinearly. Pixels already flagged in `fwd` stay occluded.
std::vector<std::uint8_t> occlusion_mask(const FlowField& fwd, const FlowField& bwd);

/// Backward warp of b onto a's geometry using the a->b flow; occluded pixels
/// take a's value.
Tensor warp(const Tensor& a, const Tensor& b, const FlowField& flow_ab);
/// Estimates a->b and b->a flow, derives occlusion, then warps.
Tensor warp(const Tensor& a, const Tensor& b, const HornSchunckParams& params);

/// Flow between frames of one video, occlusion filled in.
class FlowSource {
 public:
  virtual ~FlowSource() = default;
  virtual FlowField flow(std::size_t from, std::size_t to) = 0;
};

class ZeroFlowSource final : public FlowSource {
 public:
  ZeroFlowSource(std::size_t height, std::size_t width) : height_(height), width_(width) {}
  FlowField flow(std::size_t, std::size_t) override { return FlowField::zeros(height_, width_); }

 private:
  std::size_t height_, width_;
};

/// Explicit per-pair flows; missing pairs are an error.
class TableFlowSource final : public FlowSource {
 public:
  void set(std::size_t from, std::size_t to, FlowField f) { table_[{from, to}] = std::move(f); }
  FlowField flow(std::size_t from, std::size_t to) override;

 private:
  std::map<std::pair<std::size_t, std::size_t>, FlowField> table_;
};

/// Reads `fwd_%05d_%05d.flo` (flow i->j) and `bwd_%05d_%05d.flo` (flow j->i)
/// for i < j from a directory. Occlusion uses both directions when the
/// partner file exists.
class PrecomputedFlowSource final : public FlowSource {
 public:
  explicit PrecomputedFlowSource(std::filesystem::path dir) : dir_(std::move(dir)) {}
  FlowField flow(std::size_t from, std::size_t to) override;

  static std::filesystem::path forward_path(const std::filesystem::path& dir, std::size_t i,
                                            std::size_t j);
  static std::filesystem::path backward_path(const std::filesystem::path& dir, std::size_t i,
                                             std::size_t j);

 private:
  std::filesystem::path dir_;
};

/// Horn-Schunck on a reference video, computed lazily and cached per pair.
class HornSchunckFlowSource final : public FlowSource {
 public:
  HornSchunckFlowSource(Tensor frames, HornSchunckParams params)
      : frames_(std::move(frames)), params_(params) {}
  FlowField flow(std::size_t from, std::size_t to) override;

 private:
  Tensor frame(std::size_t i) const;

  Tensor frames_;
  HornSchunckParams params_;
  std::map<std::pair<std::size_t, std::size_t>, FlowField> cache_;
};

/// Sequential in-place window smoothing over a frames x H x W x C video:
/// frame i becomes the mean of itself and warp(P_i, P_j) for the neighbours
/// j in [i - m, i + m] that exist, where frames j < i are already smoothed.
/// The divisor is the actual member count.
Tensor sliding_window_smooth(const Tensor& frames, int m, FlowSource& flows);

/// Chooses the flow source for a smoothing pass given the decoded frames.
class FlowProvider {
 public:
  virtual ~FlowProvider() = default;
  virtual FlowSource& source_for(const Tensor& decoded) = 0;
};

/// Always the same source (zero, table or precomputed flows).
class FixedFlowProvider final : public FlowProvider {
 public:
  explicit FixedFlowProvider(std::shared_ptr<FlowSource> source) : source_(std::move(source)) {}
  FlowSource& source_for(const Tensor&) override { return *source_; }

 private:
  std::shared_ptr<FlowSource> source_;
};

/// Estimates flow with Horn-Schunck on the first decoded frames it sees and
/// reuses it, or re-estimates every call when `reflow_each_step` is set.
class HornSchunckFlowProvider final : public FlowProvider {
 public:
  HornSchunckFlowProvider(HornSchunckParams params, bool reflow_each_step)
      : params_(params), reflow_(reflow_each_step) {}
  FlowSource& source_for(const Tensor& decoded) override;
  int estimations() const noexcept { return estimations_; }

 private:
  HornSchunckParams params_;
  bool reflow_;
  int estimations_ = 0;
  std::unique_ptr<HornSchunckFlowSource> source_;
};

/// Smoothing window in inference-step indices, inclusive.
struct SmoothingParams {
  int m = 2;
  int tau4 = 25;
  int tau5 = 30;

  bool active(int step) const noexcept { return step >= tau4 && step <= tau5; }
};

/// DDIM step with latent-space consistency smoothing. Outside [tau4, tau5]
/// this is exactly ddim_denoise_step. Inside: predict z0, decode, smooth the
/// frames, re-encode to zbar, refine the noise for zbar and step with
/// sqrt(ab_prev) * zbar + sqrt(1 - ab_prev) * refined_noise.
Tensor smooth_step(const Tensor& z_t, const Tensor& eps, int step, int step_prev,
                   LatentCodec& codec, const DiffusionSchedule& sched,
                   const SmoothingParams& params, FlowProvider& flows);

}  // namespace vidstyle
