// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

// vidstyle command-line front end.
//
// Exit codes: 0 success, 2 usage error, 3 data error.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "vidstyle/config.hpp"
#include "vidstyle/error.hpp"
#include "vidstyle/flow.hpp"
#include "vidstyle/image_io.hpp"
#include "vidstyle/kernels.hpp"
#include "vidstyle/mask_propagation.hpp"
#include "vidstyle/npy.hpp"
#include "vidstyle/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vidstyle;

namespace {

constexpr int kUsage = 2;
constexpr int kDataError = 3;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// VIDSTYLE_CONFIG, when set, replaces the --config path.
RunConfig resolve_config(const std::string& flag) {
  std::string path = flag;
  if (const char* env = std::getenv("VIDSTYLE_CONFIG"); env && *env) path = env;
  return path.empty() ? parse_config("{}") : load_config(path);
}

void timed(StageTimes& times, const char* stage, auto&& fn) {
  StageTimes::Scope _(&times, stage);
  fn();
}

struct InvertArgs {
  std::string video, style, config, out;
};

int cmd_invert(const InvertArgs& a, JsonLog& log) {
  const auto t0 = Clock::now();
  StageTimes times;
  RunConfig cfg = resolve_config(a.config);
  Tensor video;
  std::optional<Tensor> style;
  timed(times, "io_read", [&] {
    video = read_npy(a.video);
    if (!a.style.empty()) style = read_npy(a.style);
  });
  Backends backends = make_backends(cfg, video.shape());
  InvertOutputs inv = run_invert(video, style, cfg, backends, &times);

  json outputs;
  timed(times, "io_write", [&] {
    const fs::path out(a.out);
    fs::create_directories(out / "trajectory");
    write_npy(inv.content.noise, out / "noise.npy");
    outputs["noise"] = (out / "noise.npy").string();
    if (inv.content.features) {
      write_npy(*inv.content.features, out / "features.npy");
      outputs["features"] = (out / "features.npy").string();
    }
    if (inv.style) {
      write_npy(inv.style->noise, out / "style_noise.npy");
      outputs["style_noise"] = (out / "style_noise.npy").string();
    }
    for (std::size_t s = 0; s < inv.content.trajectory.size(); ++s) {
      char name[32];
      std::snprintf(name, sizeof name, "%05zu.npy", s);
      write_npy(inv.content.trajectory[s], out / "trajectory" / name);
    }
    outputs["trajectory_steps"] = inv.content.trajectory.size();
  });
  json inputs{{"video", a.video}, {"style", a.style}, {"config", a.config}};
  json manifest = make_manifest("invert", cfg, inputs, outputs, times, since(t0));
  manifest["feature_step"] = inv.feature_step;
  write_json_atomic(manifest, fs::path(a.out) / "manifest.json");
  log.event("invert_done", {{"out", a.out}, {"feature_step", inv.feature_step}});
  std::cout << json{{"noise", outputs["noise"]}, {"feature_step", inv.feature_step}, {"seed", cfg.seed}}.dump()
            << '\n';
  return 0;
}

struct PropagateArgs {
  std::string features, mask, out, config;
  std::optional<double> r;
  std::optional<int> k, n;
  std::optional<std::uint64_t> seed;
};

int cmd_propagate(const PropagateArgs& a, JsonLog& log) {
  const auto t0 = Clock::now();
  RunConfig cfg = resolve_config(a.config);
  if (a.r) cfg.r = *a.r;
  if (a.k) cfg.k = *a.k;
  if (a.n) cfg.n = *a.n;
  if (a.seed) cfg.seed = *a.seed;
  validate(cfg);

  const Tensor feats = read_npy(a.features);
  if (feats.rank() != 4) throw ShapeError("features must be frames x h x w x d, got " + shape_str(feats.shape()));
  const Mask first = resize_nearest(read_mask_png(a.mask), feats.shape()[1], feats.shape()[2]);
  const MaskSequence masks = propagate(feats, first, {cfg.r, cfg.k, cfg.n, cfg.seed});
  write_mask_dir(masks, a.out);
  const double secs = since(t0);
  log.event("propagate_done", {{"frames", masks.size()}, {"seconds", secs}});
  std::cout << json{{"frames", masks.size()},
                    {"grid", {feats.shape()[1], feats.shape()[2]}},
                    {"r", cfg.r},
                    {"k", cfg.k},
                    {"n", cfg.n},
                    {"seed", cfg.seed},
                    {"seconds", secs}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_eval(const std::string& pred_dir, const std::string& gt_dir) {
  MaskSequence pred = read_mask_dir(pred_dir);
  const MaskSequence gt = read_mask_dir(gt_dir);
  if (!gt.empty()) pred = upsample_masks(pred, gt[0].height, gt[0].width);
  const MaskScores s = iou_dice(pred, gt);
  std::cout << json{{"iou", s.iou}, {"dice", s.dice}, {"frames", gt.size()}}.dump() << '\n';
  return 0;
}

struct StylizeArgs {
  std::string video, style, masks, mask, config, out, flows, frames_out, masks_out, manifest;
  bool no_smooth = false;
};

int cmd_stylize(const StylizeArgs& a, JsonLog& log) {
  const auto t0 = Clock::now();
  StageTimes io;
  StylizeRequest req;
  req.config = resolve_config(a.config);
  if (!a.flows.empty()) req.config.backend.flows_dir = a.flows;
  req.smooth = !a.no_smooth;
  timed(io, "io_read", [&] {
    req.video = read_npy(a.video);
    req.style = read_npy(a.style);
    if (!a.masks.empty()) req.masks = read_mask_dir(a.masks);
    if (!a.mask.empty()) req.first_mask = read_mask_png(a.mask);
  });
  Backends backends = make_backends(req.config, req.video.shape());
  StylizeOutputs out = run_stylize(req, backends, &log);

  json outputs{{"edited", a.out}};
  timed(io, "io_write", [&] {
    write_npy(out.edited, a.out);
    if (!a.masks_out.empty() && !out.feature_masks.empty()) {
      write_mask_dir(out.feature_masks, a.masks_out);
      outputs["masks"] = a.masks_out;
    }
    if (!a.frames_out.empty()) {
      write_frame_dir(backends.codec->decode(out.edited), a.frames_out);
      outputs["frames"] = a.frames_out;
    }
  });
  for (const auto& [stage, secs] : io.seconds()) out.times.add(stage, secs);

  const fs::path manifest = a.manifest.empty() ? fs::path(a.out).replace_extension(".manifest.json")
                                               : fs::path(a.manifest);
  json inputs{{"video", a.video}, {"style", a.style}, {"masks", a.masks}, {"mask", a.mask},
              {"config", a.config}};
  write_json_atomic(make_manifest("stylize", req.config, inputs, outputs, out.times, since(t0)),
                    manifest);
  std::cout << json{{"edited", a.out},
                    {"manifest", manifest.string()},
                    {"seed", req.config.seed},
                    {"timings", out.times.seconds()}}
                   .dump()
            << '\n';
  return 0;
}

struct SmoothArgs {
  std::string frames, out, flows, config;
  std::optional<int> m;
};

int cmd_smooth(const SmoothArgs& a, JsonLog& log) {
  const auto t0 = Clock::now();
  RunConfig cfg = resolve_config(a.config);
  if (a.m) cfg.m = *a.m;
  if (cfg.m < 0) throw ConfigError("m≥0 violated");
  const Tensor video = read_frame_dir(a.frames);
  std::shared_ptr<FlowSource> source;
  if (!a.flows.empty()) {
    source = std::make_shared<PrecomputedFlowSource>(a.flows);
  } else {
    HornSchunckParams hp;
    hp.lambda = cfg.hs_lambda;
    hp.iterations = cfg.hs_iterations;
    source = std::make_shared<HornSchunckFlowSource>(video, hp);
  }
  const Tensor smoothed = sliding_window_smooth(video, cfg.m, *source);
  write_frame_dir(smoothed, a.out);
  log.event("smooth_done", {{"frames", video.shape()[0]}, {"seconds", since(t0)}});
  std::cout << json{{"frames", video.shape()[0]}, {"m", cfg.m}, {"out", a.out}}.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Localized video style transfer with mock or external diffusion backends"};
  app.require_subcommand(1);
  int threads = 0;
  bool quiet = false;
  app.add_option("--threads", threads, "Cap on worker threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
  app.add_flag("--quiet", quiet, "Suppress JSON log lines on stderr");

  InvertArgs inv;
  auto* c_inv = app.add_subcommand("invert", "DDIM-invert a latent video");
  c_inv->add_option("--video", inv.video, "Latent video .npy (frames x C x H x W)")->required()->check(CLI::ExistingFile);
  c_inv->add_option("--style", inv.style, "Style latent .npy")->check(CLI::ExistingFile);
  c_inv->add_option("--config", inv.config, "Run config JSON")->check(CLI::ExistingFile);
  c_inv->add_option("--out", inv.out, "Output directory")->required();

  PropagateArgs prop;
  auto* c_prop = app.add_subcommand("propagate-mask", "Propagate a first-frame mask through features");
  c_prop->add_option("--features", prop.features, "Feature stack .npy (frames x h x w x d)")->required()->check(CLI::ExistingFile);
  c_prop->add_option("--mask", prop.mask, "First-frame mask PNG")->required()->check(CLI::ExistingFile);
  c_prop->add_option("--out", prop.out, "Output mask directory")->required();
  c_prop->add_option("--config", prop.config, "Run config JSON")->check(CLI::ExistingFile);
  c_prop->add_option("--r", prop.r, "Anchor sampling rate");
  c_prop->add_option("--k", prop.k, "Nearest neighbours");
  c_prop->add_option("--n", prop.n, "Previous anchor frames");
  c_prop->add_option("--seed", prop.seed, "Sampling seed");

  std::string pred_dir, gt_dir;
  auto* c_eval = app.add_subcommand("eval-mask", "IoU / Dice of predicted masks");
  c_eval->add_option("--pred", pred_dir, "Predicted mask directory")->required()->check(CLI::ExistingDirectory);
  c_eval->add_option("--gt", gt_dir, "Ground-truth mask directory")->required()->check(CLI::ExistingDirectory);

  StylizeArgs sty;
  auto* c_sty = app.add_subcommand("stylize", "Three-branch localized stylization");
  c_sty->add_option("--video", sty.video, "Content latents .npy")->required()->check(CLI::ExistingFile);
  c_sty->add_option("--style", sty.style, "Style latent .npy")->required()->check(CLI::ExistingFile);
  auto* o_masks = c_sty->add_option("--masks", sty.masks, "Mask directory, one PNG per frame")->check(CLI::ExistingDirectory);
  auto* o_mask = c_sty->add_option("--mask", sty.mask, "First-frame mask PNG to propagate")->check(CLI::ExistingFile);
  o_masks->excludes(o_mask);
  c_sty->add_option("--config", sty.config, "Run config JSON")->check(CLI::ExistingFile);
  c_sty->add_option("--out", sty.out, "Edited latent .npy")->required();
  c_sty->add_option("--flows", sty.flows, "Directory of precomputed .flo files")->check(CLI::ExistingDirectory);
  c_sty->add_option("--frames-out", sty.frames_out, "Write decoded frames here");
  c_sty->add_option("--masks-out", sty.masks_out, "Write propagated masks here");
  c_sty->add_option("--manifest", sty.manifest, "Manifest path (default: <out>.manifest.json)");
  c_sty->add_flag("--no-smooth", sty.no_smooth, "Skip the smoothing window");

  SmoothArgs sm;
  auto* c_sm = app.add_subcommand("smooth", "Sliding-window smoothing of a frame directory");
  c_sm->add_option("--frames", sm.frames, "Input frame directory")->required()->check(CLI::ExistingDirectory);
  c_sm->add_option("--out", sm.out, "Output frame directory")->required();
  c_sm->add_option("--m", sm.m, "Half window");
  c_sm->add_option("--flows", sm.flows, "Directory of precomputed .flo files")->check(CLI::ExistingDirectory);
  c_sm->add_option("--config", sm.config, "Run config JSON")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  if (sty.masks.empty() && sty.mask.empty() && c_sty->parsed()) {
    std::cerr << "stylize: one of --masks or --mask is required\n";
    return kUsage;
  }

  if (threads > 0) kernels::set_threads(threads);
  JsonLog log(quiet ? nullptr : &std::cerr);
  try {
    if (c_inv->parsed()) return cmd_invert(inv, log);
    if (c_prop->parsed()) return cmd_propagate(prop, log);
    if (c_eval->parsed()) return cmd_eval(pred_dir, gt_dir);
    if (c_sty->parsed()) return cmd_stylize(sty, log);
    if (c_sm->parsed()) return cmd_smooth(sm, log);
  } catch (const Error& e) {
    log.event("error", {{"message", e.what()}});
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}
