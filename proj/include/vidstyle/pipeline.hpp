// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "vidstyle/backbone.hpp"
#include "vidstyle/config.hpp"
#include "vidstyle/mask.hpp"
#include "vidstyle/scheduler.hpp"
#include "vidstyle/stylization.hpp"

namespace vidstyle {

inline constexpr std::string_view kVersion = "0.1.0";

/// Line-delimited JSON events: {"event": name, ...fields}. A null stream
/// discards everything.
class JsonLog {
 public:
  explicit JsonLog(std::ostream* out = nullptr) : out_(out) {}
  void event(std::string_view name, nlohmann::json fields = nlohmann::json::object());

 private:
  std::ostream* out_;
};

/// Predictor and codec selected by the backend section of a run config.
struct Backends {
  std::unique_ptr<NoisePredictor> predictor;
  /// Same object as `predictor` when it supports attention hooks.
  AttentionBackbone* backbone = nullptr;
  std::unique_ptr<LatentCodec> codec;
};

/// `latent_shape` is frames x C x H x W; mock backends size themselves from
/// it and draw their weights from the config seed.
Backends make_backends(const RunConfig& cfg, const Shape& latent_shape);

/// Writes JSON to `path` through a temporary file and a rename.
void write_json_atomic(const nlohmann::json& doc, const std::filesystem::path& path);

/// Run manifest: version, command, seed, full config, inputs, outputs and
/// per-stage seconds.
nlohmann::json make_manifest(std::string_view command, const RunConfig& cfg,
                             const nlohmann::json& inputs, const nlohmann::json& outputs,
                             const StageTimes& times, double wall_seconds);

struct InvertOutputs {
  InversionResult content;
  std::optional<InversionResult> style;
  int feature_step = 0;
};

/// DDIM inversion of a latent video (and optionally a style latent), with
/// features captured at step round(t0 * T) when the predictor exposes them.
InvertOutputs run_invert(const Tensor& video, const std::optional<Tensor>& style,
                         const RunConfig& cfg, Backends& backends, StageTimes* times = nullptr);

struct StylizeRequest {
  Tensor video;  // frames x C x H x W clean latents
  Tensor style;  // 1 x C x H x W (or C x H x W) clean style latent
  /// Either the full mask sequence or a first-frame mask to propagate. Any
  /// resolution; masks are resampled with nearest neighbour.
  std::optional<MaskSequence> masks;
  std::optional<Mask> first_mask;
  RunConfig config;
  bool smooth = true;
};

struct StylizeOutputs {
  Tensor edited;
  Tensor content;
  MaskSequence feature_masks;  // empty when masks were given
  MaskSequence latent_masks;
  StageTimes times;
  double wall_seconds = 0.0;
};

/// Inversion, optional mask propagation and the three-branch loop with
/// interleaved smoothing.
StylizeOutputs run_stylize(const StylizeRequest& request, Backends& backends,
                           JsonLog* log = nullptr);

}  // namespace vidstyle
