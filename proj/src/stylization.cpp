// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "vidstyle/stylization.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vidstyle/error.hpp"

namespace vidstyle {

namespace {

// a * x + (1 - a) * y, elementwise.
Tensor mix(double a, const Tensor& x, const Tensor& y) { return axpby(a, x, 1.0 - a, y); }

// Per-frame, per-head AdaIN of `x` (frames x heads x tokens x dim) towards the
// single-frame `style`.
Tensor adain_heads(const Tensor& x, const Tensor& style, double eps) {
  const std::size_t frames = x.shape()[0], heads = x.shape()[1];
  const std::size_t tokens = x.shape()[2], dim = x.shape()[3];
  const std::size_t st = style.shape()[2];
  Tensor out(x.shape());
  for (std::size_t h = 0; h < heads; ++h) {
    const auto s = style.data().subspan(h * st * dim, st * dim);
    const Tensor ys({st, dim}, std::vector<double>(s.begin(), s.end()));
    for (std::size_t f = 0; f < frames; ++f) {
      const std::size_t off = (f * heads + h) * tokens * dim;
      const auto src = x.data().subspan(off, tokens * dim);
      const Tensor xs({tokens, dim}, std::vector<double>(src.begin(), src.end()));
      const Tensor r = adain(xs, ys, 1, {0}, eps);
      std::copy(r.data().begin(), r.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(off));
    }
  }
  return out;
}

// Broadcast a single-frame tensor to `frames` frames.
Tensor broadcast0(const Tensor& t, std::size_t frames) {
  Shape s = t.shape();
  s[0] = frames;
  Tensor out(s);
  const auto src = t.row0(0);
  for (std::size_t f = 0; f < frames; ++f) std::copy(src.begin(), src.end(), out.row0(f).begin());
  return out;
}

Tensor shift_kv(const Tensor& edited, const Tensor& style, double beta, double eps,
                const char* what) {
  if (style.rank() != 4 || style.shape()[0] != 1 || style.shape()[1] != edited.shape()[1] ||
      style.shape()[3] != edited.shape()[3]) {
    throw ShapeError(std::string("attention_shift: style ") + what + " " +
                     shape_str(style.shape()) + " incompatible with " + shape_str(edited.shape()));
  }
  if (style.shape()[2] != edited.shape()[2]) {
    throw ShapeError(std::string("attention_shift: style ") + what +
                     " token count differs from the edited branch");
  }
  const Tensor styled = broadcast0(style, edited.shape()[0]);
  return mix(beta, adain_heads(edited, style, eps), styled);
}

// Records or edits attention packets of one branch.
class BranchHook final : public AttentionHook {
 public:
  enum class Mode { capture_q, capture_kv, shift };

  BranchHook(Mode mode, const std::vector<std::size_t>& layers, std::vector<LayerReference>& refs)
      : mode_(mode), layers_(layers), refs_(refs) {}

  void set_shift(int step, const StyleSchedule* sched) {
    step_ = step;
    sched_ = sched;
  }

  AttentionPacket on_attention(std::size_t layer, const AttentionPacket& pkt) override {
    if (std::find(layers_.begin(), layers_.end(), layer) == layers_.end()) return pkt;
    LayerReference& ref = refs_[layer];
    switch (mode_) {
      case Mode::capture_q:
        ref.content_q = pkt.q;
        return pkt;
      case Mode::capture_kv:
        ref.style_k = pkt.k;
        ref.style_v = pkt.v;
        return pkt;
      case Mode::shift:
        return attention_shift(pkt, ref, step_, *sched_);
    }
    return pkt;
  }

 private:
  Mode mode_;
  const std::vector<std::size_t>& layers_;
  std::vector<LayerReference>& refs_;
  int step_ = 0;
  const StyleSchedule* sched_ = nullptr;
};

}  // namespace

StyleSchedule StyleSchedule::from_config(const RunConfig& cfg) {
  StyleSchedule s;
  s.tau0 = cfg.step_index(cfg.tau0);
  s.tau1 = cfg.step_index(cfg.tau1);
  s.tau2 = cfg.step_index(cfg.tau2);
  s.tau3 = cfg.step_index(cfg.tau3);
  s.gamma = cfg.gamma;
  s.beta_tau2 = cfg.beta_tau2;
  s.beta_tau3 = cfg.beta_tau3;
  return s;
}

Tensor localized_blend(const Tensor& edited, const Tensor& content, const MaskSequence& masks) {
  require_same_shape(edited, content, "localized_blend");
  if (edited.rank() != 4) throw ShapeError("localized_blend: expected frames x C x H x W");
  const std::size_t frames = edited.shape()[0], c = edited.shape()[1];
  const std::size_t h = edited.shape()[2], w = edited.shape()[3];
  if (masks.size() != frames) {
    throw ShapeError("localized_blend: " + std::to_string(masks.size()) + " masks for " +
                     std::to_string(frames) + " frames");
  }
  Tensor out(edited.shape());
  for (std::size_t f = 0; f < frames; ++f) {
    const Mask& m = masks[f];
    if (m.height != h || m.width != w || m.values.size() != h * w) {
      throw ShapeError("localized_blend: mask size differs from the latent grid");
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t base = (f * c + ch) * h * w;
      for (std::size_t i = 0; i < h * w; ++i) {
        out[base + i] = m.values[i] ? content[base + i] : edited[base + i];
      }
    }
  }
  return out;
}

Tensor latent_shift(const Tensor& edited, const Tensor& style, int step,
                    const StyleSchedule& sched, bool per_frame) {
  if (!sched.latent_window(step)) return edited;
  if (edited.rank() != 4 || style.rank() != 4) {
    throw ShapeError("latent_shift: latents must be frames x C x H x W");
  }
  if (!per_frame) return adain(edited, style, 1, {0, 2, 3});
  Tensor out(edited.shape());
  for (std::size_t f = 0; f < edited.shape()[0]; ++f) {
    out.set_slice0(f, adain(edited.slice0(f), style, 1, {0, 2, 3}));
  }
  return out;
}

double beta_at(int step, const StyleSchedule& s) {
  if (s.tau3 == s.tau2) throw Error("beta_at: degenerate ramp (tau2 == tau3)");
  const double w = static_cast<double>(step - s.tau2) / static_cast<double>(s.tau3 - s.tau2);
  const double beta = (1.0 - w) * s.beta_tau2 + w * s.beta_tau3;
  return std::clamp(beta, std::min(s.beta_tau2, s.beta_tau3), std::max(s.beta_tau2, s.beta_tau3));
}

AttentionPacket attention_shift(const AttentionPacket& edited, const LayerReference& ref,
                                double beta, double gamma, double eps) {
  if (!ref.content_q) throw Error("attention_shift: missing content query at hooked layer");
  if (!ref.style_k || !ref.style_v) throw Error("attention_shift: missing style key/value at hooked layer");
  if (edited.q.rank() != 4 || edited.k.rank() != 4 || !edited.k.same_shape(edited.v)) {
    throw ShapeError("attention_shift: malformed edited packet");
  }
  if (!ref.content_q->same_shape(edited.q)) {
    throw ShapeError("attention_shift: content query " + shape_str(ref.content_q->shape()) +
                     " vs edited " + shape_str(edited.q.shape()));
  }
  AttentionPacket out;
  out.q = mix(gamma, edited.q, *ref.content_q);
  out.k = shift_kv(edited.k, *ref.style_k, beta, eps, "key");
  out.v = shift_kv(edited.v, *ref.style_v, beta, eps, "value");
  return out;
}

AttentionPacket attention_shift(const AttentionPacket& edited, const LayerReference& ref, int step,
                                const StyleSchedule& sched) {
  return attention_shift(edited, ref, beta_at(step, sched), sched.gamma);
}

StageTimes::Scope::Scope(StageTimes* times, std::string name)
    : times_(times), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}

StageTimes::Scope::~Scope() {
  if (!times_) return;
  const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start_;
  times_->add(name_, d.count());
}

double StageTimes::total() const {
  double s = 0.0;
  for (const auto& [name, sec] : seconds_) s += sec;
  return s;
}

StylizeOptions StylizeOptions::from_config(const RunConfig& cfg) {
  StylizeOptions o;
  o.schedule = StyleSchedule::from_config(cfg);
  o.latent_shift = cfg.latent_shift;
  o.attention_shift = cfg.attention_shift;
  o.adain_per_frame = cfg.adain_per_frame;
  o.replay_from_cache = cfg.replay_from_cache;
  for (int l : cfg.hooked_layers) o.hooked_layers.push_back(static_cast<std::size_t>(l));
  return o;
}

StylizeResult denoise_edited(AttentionBackbone& backbone, const DiffusionSchedule& sched,
                             const InversionResult& content, const InversionResult& style,
                             const MaskSequence& latent_masks, const StylizeOptions& options,
                             SmoothingContext* smoothing, StageTimes* times) {
  const int T = sched.steps();
  if (content.noise.rank() != 4 || style.noise.rank() != 4 || style.noise.shape()[0] != 1) {
    throw ShapeError("denoise_edited: need a frames x C x H x W content latent and a single style frame");
  }
  if (options.replay_from_cache &&
      (content.trajectory.size() != static_cast<std::size_t>(T) + 1 ||
       style.trajectory.size() != static_cast<std::size_t>(T) + 1)) {
    throw Error("denoise_edited: replay_from_cache needs full inversion trajectories");
  }
  if (smoothing && (!smoothing->codec || !smoothing->flows)) {
    throw Error("denoise_edited: smoothing context lacks a codec or flow provider");
  }

  std::vector<std::size_t> layers = options.hooked_layers;
  if (layers.empty()) layers = backbone.up_block_layers();
  for (std::size_t l : layers) {
    if (l >= backbone.attention_layers()) {
      throw Error("denoise_edited: hooked layer " + std::to_string(l) + " does not exist");
    }
  }
  std::vector<LayerReference> refs(backbone.attention_layers());
  BranchHook content_hook(BranchHook::Mode::capture_q, layers, refs);
  BranchHook style_hook(BranchHook::Mode::capture_kv, layers, refs);
  BranchHook edited_hook(BranchHook::Mode::shift, layers, refs);
  const Conditioning none;

  Tensor z_content = content.noise;
  Tensor z_style = style.noise;
  Tensor z_edited = content.noise;
  for (int s = T; s >= 1; --s) {
    const int t = sched.timestep(s);
    const bool shift_attn = options.attention_shift && options.schedule.attention_window(s);

    Tensor eps_content, eps_style, eps_edited;
    {
      StageTimes::Scope _(times, "content_branch");
      eps_content = backbone.predict_hooked(z_content, t, none, &content_hook);
    }
    {
      StageTimes::Scope _(times, "style_branch");
      eps_style = backbone.predict_hooked(z_style, t, none, &style_hook);
    }
    {
      StageTimes::Scope _(times, "edited_branch");
      edited_hook.set_shift(s, &options.schedule);
      eps_edited = backbone.predict_hooked(z_edited, t, none, shift_attn ? &edited_hook : nullptr);
    }
    if (!eps_edited.same_shape(z_edited) || !eps_content.same_shape(z_content)) {
      throw ShapeError("denoise_edited: backbone changed the latent shape");
    }

    if (options.latent_shift && options.schedule.latent_window(s)) {
      StageTimes::Scope _(times, "latent_shift");
      z_edited = latent_shift(z_edited, z_style, s, options.schedule, options.adain_per_frame);
    }

    Tensor next_edited;
    if (smoothing && smoothing->params.active(s)) {
      StageTimes::Scope _(times, "smoothing");
      next_edited = smooth_step(z_edited, eps_edited, s, s - 1, *smoothing->codec, sched,
                                smoothing->params, *smoothing->flows);
    } else {
      StageTimes::Scope _(times, "scheduler");
      next_edited = ddim_denoise_step(z_edited, eps_edited, s, s - 1, sched);
    }
    {
      StageTimes::Scope _(times, "scheduler");
      if (options.replay_from_cache) {
        z_content = content.trajectory[static_cast<std::size_t>(s - 1)];
        z_style = style.trajectory[static_cast<std::size_t>(s - 1)];
      } else {
        z_content = ddim_denoise_step(z_content, eps_content, s, s - 1, sched);
        z_style = ddim_denoise_step(z_style, eps_style, s, s - 1, sched);
      }
    }
    {
      StageTimes::Scope _(times, "blend");
      z_edited = localized_blend(next_edited, z_content, latent_masks);
    }
    if (!all_finite(z_edited)) {
      throw Error("denoise_edited: non-finite latent at step " + std::to_string(s));
    }
  }
  return {std::move(z_edited), std::move(z_content)};
}

}  // namespace vidstyle
