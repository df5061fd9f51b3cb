// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vidstyle/backbone.hpp"
#include "vidstyle/config.hpp"
#include "vidstyle/flow.hpp"
#include "vidstyle/mask.hpp"
#include "vidstyle/scheduler.hpp"

namespace vidstyle {

/// Style windows and weights in inference-step units (inclusive windows).
struct StyleSchedule {
  int tau0 = 5, tau1 = 10;   // latent shift
  int tau2 = 20, tau3 = 50;  // attention shift
  double gamma = 0.35;
  double beta_tau2 = 0.1;
  double beta_tau3 = 0.9;

  static StyleSchedule from_config(const RunConfig& cfg);

  bool latent_window(int step) const noexcept { return step >= tau0 && step <= tau1; }
  bool attention_window(int step) const noexcept { return step >= tau2 && step <= tau3; }
};

/// out^i = M^i * content^i + (1 - M^i) * edited^i, evaluated as a select so
/// each element is bitwise one of its sources. Masks are height x width per
/// frame and apply to every channel of a frames x C x H x W latent.
Tensor localized_blend(const Tensor& edited, const Tensor& content, const MaskSequence& masks);

/// AdaIN of the edited latent towards the style latent while the step is in
/// the latent-shift window, identity otherwise. Statistics are per channel
/// over every frame and position jointly, or per frame when `per_frame`.
Tensor latent_shift(const Tensor& edited, const Tensor& style, int step,
                    const StyleSchedule& sched, bool per_frame = false);

/// Linear ramp from beta_tau2 at tau2 to beta_tau3 at tau3, clamped to the
/// endpoint range. Endpoints are reproduced exactly.
double beta_at(int step, const StyleSchedule& sched);

/// Cached content queries and style keys / values of one layer.
struct LayerReference {
  std::optional<Tensor> content_q;
  std::optional<Tensor> style_k;
  std::optional<Tensor> style_v;
};

/// Query blending plus K/V AdaIN blending:
///   q' = gamma * q + (1 - gamma) * q_content
///   k' = beta * adain(k, k_style) + (1 - beta) * k_style      (v alike)
/// AdaIN statistics are per head and channel over tokens; the single style
/// frame is broadcast to every edited frame.
AttentionPacket attention_shift(const AttentionPacket& edited, const LayerReference& ref,
                                double beta, double gamma, double eps = kAdainEps);
AttentionPacket attention_shift(const AttentionPacket& edited, const LayerReference& ref, int step,
                                const StyleSchedule& sched);

/// Wall-clock seconds per named stage.
class StageTimes {
 public:
  class Scope {
   public:
    Scope(StageTimes* times, std::string name);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    StageTimes* times_;
    std::string name_;
    std::chrono::steady_clock::time_point start_;
  };

  void add(const std::string& stage, double seconds) { seconds_[stage] += seconds; }
  const std::map<std::string, double>& seconds() const noexcept { return seconds_; }
  double total() const;

 private:
  std::map<std::string, double> seconds_;
};

struct StylizeOptions {
  StyleSchedule schedule;
  bool latent_shift = true;
  bool attention_shift = true;
  bool adain_per_frame = false;
  bool replay_from_cache = false;
  /// Empty means the backbone's up-sampling half.
  std::vector<std::size_t> hooked_layers;

  static StylizeOptions from_config(const RunConfig& cfg);
};

/// Interleaved latent smoothing for the edited branch.
struct SmoothingContext {
  LatentCodec* codec = nullptr;
  FlowProvider* flows = nullptr;
  SmoothingParams params;
};

struct StylizeResult {
  Tensor edited;   // edited latent at step 0
  Tensor content;  // content branch at step 0
};

/// Three-branch denoising from the inverted content and style noise.
///
/// For every step s = T..1: the content and style branches run with capture
/// hooks (queries and keys / values at the hooked layers), the edited branch
/// runs with attention_shift inside the attention window, its latent is
/// AdaIN-shifted inside the latent window, it is stepped (with smoothing
/// inside the smoothing window when `smoothing` is given), and the result is
/// blended with the content latent of step s - 1.
StylizeResult denoise_edited(AttentionBackbone& backbone, const DiffusionSchedule& sched,
                             const InversionResult& content, const InversionResult& style,
                             const MaskSequence& latent_masks, const StylizeOptions& options,
                             SmoothingContext* smoothing = nullptr, StageTimes* times = nullptr);

}  // namespace vidstyle
