// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "vidstyle/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <ostream>

#include "vidstyle/error.hpp"
#include "vidstyle/external_backend.hpp"
#include "vidstyle/flow.hpp"
#include "vidstyle/kernels.hpp"
#include "vidstyle/mask_propagation.hpp"
#include "vidstyle/mock_backbone.hpp"
#include "vidstyle/mock_backends.hpp"

namespace vidstyle {

using nlohmann::json;

namespace {

std::filesystem::path work_dir(const RunConfig& cfg, const char* sub) {
  std::filesystem::path base = cfg.backend.work_dir.empty()
                                   ? std::filesystem::temp_directory_path() / "vidstyle-work"
                                   : std::filesystem::path(cfg.backend.work_dir);
  return base / sub;
}

DiffusionSchedule schedule_for(const RunConfig& cfg) {
  return DiffusionSchedule::build(cfg.schedule.kind, cfg.schedule.beta_start, cfg.schedule.beta_end,
                                  cfg.schedule.train_steps, cfg.T);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void JsonLog::event(std::string_view name, json fields) {
  if (!out_) return;
  json line = json::object();
  line["event"] = name;
  for (auto& [k, v] : fields.items()) line[k] = v;
  *out_ << line.dump() << '\n';
  out_->flush();
}

Backends make_backends(const RunConfig& cfg, const Shape& latent_shape) {
  if (latent_shape.size() != 4) {
    throw ShapeError("latents must be frames x C x H x W, got " + shape_str(latent_shape));
  }
  const std::size_t channels = latent_shape[1];
  Backends b;
  const std::string& p = cfg.backend.predictor;
  if (p == "mock") {
    MockBackboneParams mp;
    mp.channels = channels;
    mp.pool = MockBackbone::pool_for(latent_shape[2], latent_shape[3]);
    mp.seed = cfg.seed;
    auto bb = std::make_unique<MockBackbone>(mp);
    b.backbone = bb.get();
    b.predictor = std::move(bb);
  } else if (p == "constant") {
    b.predictor = std::make_unique<ConstantNoisePredictor>(0.1);
  } else if (p == "random") {
    b.predictor = std::make_unique<SeededNoisePredictor>(cfg.seed);
  } else if (p == "external") {
    if (cfg.backend.predictor_cmd.empty()) throw ConfigError("backend.predictor_cmd is required for an external predictor");
    auto bb = std::make_unique<ExternalBackbone>(
        BackendProcess(cfg.backend.predictor_cmd, work_dir(cfg, "predictor")));
    b.backbone = bb.get();
    b.predictor = std::move(bb);
  } else {
    throw ConfigError("backend.predictor must be one of mock, constant, random, external");
  }

  const std::string& c = cfg.backend.codec;
  if (c == "orthogonal") {
    b.codec = std::make_unique<OrthogonalCodec>(channels, cfg.seed);
  } else if (c == "identity") {
    b.codec = std::make_unique<IdentityCodec>();
  } else if (c == "external") {
    if (cfg.backend.codec_cmd.empty()) throw ConfigError("backend.codec_cmd is required for an external codec");
    b.codec = std::make_unique<ExternalCodec>(BackendProcess(cfg.backend.codec_cmd, work_dir(cfg, "codec")));
  } else {
    throw ConfigError("backend.codec must be one of orthogonal, identity, external");
  }
  return b;
}

void write_json_atomic(const json& doc, const std::filesystem::path& path) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out << doc.dump(2) << '\n';
    if (!out) throw FormatError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

json make_manifest(std::string_view command, const RunConfig& cfg, const json& inputs,
                   const json& outputs, const StageTimes& times, double wall_seconds) {
  json m;
  m["tool"] = "vidstyle";
  m["version"] = kVersion;
  m["command"] = command;
  m["seed"] = cfg.seed;
  m["threads"] = kernels::max_threads();
  m["config"] = json::parse(dump_config(cfg));
  m["t0_step"] = cfg.step_index(cfg.t0);
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  m["timings"] = times.seconds();
  m["stage_seconds"] = times.total();
  m["wall_seconds"] = wall_seconds;
  return m;
}

InvertOutputs run_invert(const Tensor& video, const std::optional<Tensor>& style,
                         const RunConfig& cfg, Backends& backends, StageTimes* times) {
  const DiffusionSchedule sched = schedule_for(cfg);
  InvertOutputs out;
  out.feature_step = cfg.step_index(cfg.t0);
  std::optional<int> tap;
  if (backends.predictor->has_feature_hook()) tap = out.feature_step;
  {
    StageTimes::Scope _(times, "inversion");
    out.content = run_inversion(video, *backends.predictor, sched, tap);
    if (style) {
      Tensor s = *style;
      if (s.rank() == 3) s = s.reshaped({1, s.shape()[0], s.shape()[1], s.shape()[2]});
      out.style = run_inversion(s, *backends.predictor, sched);
    }
  }
  return out;
}

StylizeOutputs run_stylize(const StylizeRequest& req, Backends& backends, JsonLog* log) {
  const auto wall0 = std::chrono::steady_clock::now();
  const RunConfig& cfg = req.config;
  validate(cfg);
  if (!backends.backbone) {
    throw ConfigError("stylize needs an attention backbone (backend.predictor mock or external)");
  }
  if (req.video.rank() != 4) throw ShapeError("video latents must be frames x C x H x W");
  const std::size_t frames = req.video.shape()[0];
  const std::size_t height = req.video.shape()[2], width = req.video.shape()[3];
  Tensor style = req.style;
  if (style.rank() == 3) style = style.reshaped({1, style.shape()[0], style.shape()[1], style.shape()[2]});
  if (style.rank() != 4 || style.shape()[0] != 1 || style.shape()[1] != req.video.shape()[1]) {
    throw ShapeError("style latent " + shape_str(req.style.shape()) + " does not match video " +
                     shape_str(req.video.shape()));
  }
  if (!req.masks && !req.first_mask) throw Error("stylize: need a mask sequence or a first-frame mask");

  StylizeOutputs out;
  StageTimes& times = out.times;
  const DiffusionSchedule sched = schedule_for(cfg);

  InvertOutputs inv = run_invert(req.video, style, cfg, backends, &times);
  if (log) log->event("inversion_done", {{"frames", frames}, {"steps", cfg.T}, {"feature_step", inv.feature_step}});

  {
    StageTimes::Scope _(&times, "mask_propagation");
    if (req.masks) {
      if (req.masks->size() != frames) {
        throw ShapeError("stylize: " + std::to_string(req.masks->size()) + " masks for " +
                         std::to_string(frames) + " frames");
      }
      out.latent_masks = upsample_masks(*req.masks, height, width);
    } else {
      if (!inv.content.features) throw Error("stylize: the predictor exposes no features for mask propagation");
      const Tensor& feats = *inv.content.features;
      const Mask first = resize_nearest(*req.first_mask, feats.shape()[1], feats.shape()[2]);
      PropagationParams pp{cfg.r, cfg.k, cfg.n, cfg.seed};
      out.feature_masks = propagate(feats, first, pp);
      out.latent_masks = upsample_masks(out.feature_masks, height, width);
    }
  }
  if (log) log->event("masks_ready", {{"frames", out.latent_masks.size()}, {"propagated", !req.masks}});

  std::unique_ptr<FlowProvider> flows;
  SmoothingContext smoothing;
  const bool smooth = req.smooth && cfg.smoothing;
  if (smooth) {
    if (!cfg.backend.flows_dir.empty()) {
      flows = std::make_unique<FixedFlowProvider>(
          std::make_shared<PrecomputedFlowSource>(cfg.backend.flows_dir));
    } else {
      HornSchunckParams hp;
      hp.lambda = cfg.hs_lambda;
      hp.iterations = cfg.hs_iterations;
      flows = std::make_unique<HornSchunckFlowProvider>(hp, cfg.reflow_each_step);
    }
    smoothing.codec = backends.codec.get();
    smoothing.flows = flows.get();
    smoothing.params = {cfg.m, cfg.step_index(cfg.tau4), cfg.step_index(cfg.tau5)};
  }

  StylizeResult res = denoise_edited(*backends.backbone, sched, inv.content, *inv.style,
                                     out.latent_masks, StylizeOptions::from_config(cfg),
                                     smooth ? &smoothing : nullptr, &times);
  out.edited = std::move(res.edited);
  out.content = std::move(res.content);
  out.wall_seconds = seconds_since(wall0);
  if (log) {
    log->event("stylize_done", {{"wall_seconds", out.wall_seconds}, {"timings", times.seconds()}});
  }
  return out;
}

}  // namespace vidstyle
