// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance checks. Prints one PASS / FAIL line per criterion and exits
// nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "support.hpp"
#include "vidstyle/config.hpp"
#include "vidstyle/flow.hpp"
#include "vidstyle/flow_field.hpp"
#include "vidstyle/image_io.hpp"
#include "vidstyle/kernels.hpp"
#include "vidstyle/mask_propagation.hpp"
#include "vidstyle/mock_backbone.hpp"
#include "vidstyle/mock_backends.hpp"
#include "vidstyle/npy.hpp"
#include "vidstyle/pipeline.hpp"
#include "vidstyle/scheduler.hpp"
#include "vidstyle/stylization.hpp"

using namespace vidstyle;
using namespace vidstyle::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. Inversion followed by sampling with a constant predictor.
void ddim_round_trip() {
  const Tensor video = random_tensor({16, 4, 64, 64}, 1);
  const auto sched = DiffusionSchedule::stable_diffusion(50);
  ConstantNoisePredictor pred(0.1);
  const auto t0 = Clock::now();
  const InversionResult inv = run_inversion(video, pred, sched);
  const Tensor back = run_denoising(inv.noise, pred, sched);
  const double secs = seconds_since(t0);
  const double err = max_abs_diff(back, video);
  report(1, "DDIM round trip", err < 1e-10 && secs < 5.0,
         fmt("max |err| %.3g (< 1e-10), %.2f s (< 5 s)", err, secs));
}

// 2. AdaIN output moments equal the style moments.
void adain_contract() {
  double worst_moment = 0.0, worst_self = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    CounterRng rng = CounterRng::stream(seed, "acceptance.adain");
    const std::size_t n = 1 + rng.below(3), c = 1 + rng.below(4);
    const std::size_t h = 2 + rng.below(7), w = 2 + rng.below(7);
    const double xs = 0.1 + 5.0 * rng.uniform(), ys = 0.1 + 5.0 * rng.uniform();
    const double xm = 10.0 * rng.uniform() - 5.0, ym = 10.0 * rng.uniform() - 5.0;
    const Tensor x = random_tensor({n, c, h, w}, 2 * seed, xs, xm);
    const Tensor y = random_tensor({n, c, h + 1, w}, 2 * seed + 1, ys, ym);
    const Tensor out = adain(x, y, 1, {0, 2, 3});
    const Moments mo = channel_moments(out, 1, {0, 2, 3});
    const Moments my = channel_moments(y, 1, {0, 2, 3});
    for (std::size_t ch = 0; ch < c; ++ch) {
      worst_moment = std::max({worst_moment, std::abs(mo.mean[ch] - my.mean[ch]),
                               std::abs(mo.std[ch] - my.std[ch])});
    }
    worst_self = std::max(worst_self, max_abs_diff(adain(x, x, 1, {0, 2, 3}), x));
  }
  report(2, "AdaIN moment contract", worst_moment < 1e-6 && worst_self < 1e-7,
         fmt("1000 tensors, worst moment error %.3g (< 1e-6), adain(x,x) error %.3g (< 1e-7)",
             worst_moment, worst_self));
}

// 3. Full-rate propagation against the brute-force reference.
void propagation_oracle() {
  int mismatches = 0;
  const int ks[] = {1, 5, 15};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Tensor feats = random_tensor({4, 16, 16, 8}, 1000 + seed);
    const Mask first = random_mask(16, 16, 2000 + seed, 0.3);
    const int k = ks[seed % 3];
    const MaskSequence want = brute_force_propagate(feats, first, static_cast<std::size_t>(k));
    const PropagationParams p{1.0, k, 4, seed};
    if (propagate(feats, first, p) != want) ++mismatches;
    if (propagate_serial(feats, first, p) != want) ++mismatches;
  }
  report(3, "mask propagation oracle equivalence", mismatches == 0,
         fmt("50 seeds, 4 x 16 x 16 grids, r = 1, n = N, %d mismatches", mismatches));
}

// 4. Circularly shifted feature sequences.
void translation_suite() {
  double iou = 0.0, dice = 0.0;
  int exact = 0;
  constexpr int kSeeds = 20;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    const TranslationScene scene = translation_scene(16, 32, 32, 12, seed, 1, 0.0, 4);
    const MaskScores s = iou_dice(propagate(scene.features, scene.truth[0], {0.3, 15, 9, seed}),
                                  scene.truth);
    iou += s.iou;
    dice += s.dice;
    if (propagate(scene.features, scene.truth[0], {1.0, 15, 9, seed}) == scene.truth) ++exact;
  }
  iou /= kSeeds;
  dice /= kSeeds;
  report(4, "synthetic translation suite", iou >= 0.90 && dice >= 0.94 && exact == kSeeds,
         fmt("r = 0.3: mean IoU %.4f (>= 0.90), mean Dice %.4f (>= 0.94); r = 1: %d/%d exact", iou,
             dice, exact, kSeeds));
}

class FnHook final : public AttentionHook {
 public:
  explicit FnHook(std::function<AttentionPacket(std::size_t, const AttentionPacket&)> fn)
      : fn_(std::move(fn)) {}
  AttentionPacket on_attention(std::size_t layer, const AttentionPacket& pkt) override {
    return fn_(layer, pkt);
  }

 private:
  std::function<AttentionPacket(std::size_t, const AttentionPacket&)> fn_;
};

Tensor broadcast_frames(const Tensor& one, std::size_t frames) {
  std::vector<Tensor> copies(frames, one);
  return concat0(copies);
}

// AdaIN per frame and head over tokens, style frame broadcast.
Tensor adain_tokens(const Tensor& x, const Tensor& style) {
  const std::size_t frames = x.shape()[0], heads = x.shape()[1];
  const std::size_t tokens = x.shape()[2], dim = x.shape()[3], st = style.shape()[2];
  Tensor out(x.shape());
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t h = 0; h < heads; ++h) {
      Tensor xs({tokens, dim}), ys({st, dim});
      for (std::size_t i = 0; i < tokens * dim; ++i) xs[i] = x[(f * heads + h) * tokens * dim + i];
      for (std::size_t i = 0; i < st * dim; ++i) ys[i] = style[h * st * dim + i];
      const Tensor r = adain(xs, ys, 1, {0});
      for (std::size_t i = 0; i < tokens * dim; ++i) out[(f * heads + h) * tokens * dim + i] = r[i];
    }
  }
  return out;
}

// 5. Attention-shift endpoints on the mock backbone.
void attention_endpoints() {
  MockBackbone bb({.pool = MockBackbone::pool_for(16, 16), .seed = 5});
  const Tensor content = random_tensor({3, 4, 16, 16}, 50);
  const Tensor style = random_tensor({1, 4, 16, 16}, 51, 0.7, 0.5);
  const Tensor edited = random_tensor({3, 4, 16, 16}, 52);
  const int t = 600;

  std::vector<LayerReference> refs(bb.attention_layers());
  FnHook capture_q([&](std::size_t l, const AttentionPacket& p) {
    refs[l].content_q = p.q;
    return p;
  });
  FnHook capture_kv([&](std::size_t l, const AttentionPacket& p) {
    refs[l].style_k = p.k;
    refs[l].style_v = p.v;
    return p;
  });
  bb.predict_hooked(content, t, {}, &capture_q);
  bb.predict_hooked(style, t, {}, &capture_kv);

  auto shifted = [&](double beta, double gamma) {
    FnHook h([&, beta, gamma](std::size_t l, const AttentionPacket& p) {
      return attention_shift(p, refs[l], beta, gamma);
    });
    return bb.predict_hooked(edited, t, {}, &h);
  };
  FnHook replace([&](std::size_t l, const AttentionPacket& p) {
    return AttentionPacket{p.q, broadcast_frames(*refs[l].style_k, p.k.shape()[0]),
                           broadcast_frames(*refs[l].style_v, p.v.shape()[0])};
  });
  FnHook full_adain([&](std::size_t l, const AttentionPacket& p) {
    return AttentionPacket{p.q, adain_tokens(p.k, *refs[l].style_k), adain_tokens(p.v, *refs[l].style_v)};
  });
  FnHook query_only([&](std::size_t l, const AttentionPacket& p) {
    const AttentionPacket s = attention_shift(p, refs[l], 0.5, 0.35);
    return AttentionPacket{p.q, s.k, s.v};
  });
  const bool b0 = bitwise_equal(shifted(0.0, 1.0), bb.predict_hooked(edited, t, {}, &replace));
  const bool b1 = bitwise_equal(shifted(1.0, 1.0), bb.predict_hooked(edited, t, {}, &full_adain));
  const bool g1 = bitwise_equal(shifted(0.5, 1.0), bb.predict_hooked(edited, t, {}, &query_only));

  const StyleSchedule sched = StyleSchedule::from_config(RunConfig{});
  const double bt2 = beta_at(sched.tau2, sched), bt3 = beta_at(sched.tau3, sched);
  const bool ends = bt2 == 0.1 && bt3 == 0.9;
  report(5, "attention-shift endpoint reductions", b0 && b1 && g1 && ends,
         fmt("beta=0 replacement %s, beta=1 AdaIN %s, gamma=1 query %s, beta(tau2)=%.17g, "
             "beta(tau3)=%.17g",
             b0 ? "exact" : "differs", b1 ? "exact" : "differs", g1 ? "exact" : "differs", bt2,
             bt3));
}

// 6. Localized blending is a partition of content and edited elements.
void blend_partition() {
  int bad = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    CounterRng rng = CounterRng::stream(trial, "acceptance.blend");
    const std::size_t f = 1 + rng.below(4), c = 1 + rng.below(4);
    const std::size_t h = 1 + rng.below(12), w = 1 + rng.below(12);
    const Tensor edited = random_tensor({f, c, h, w}, 3 * trial);
    const Tensor content = random_tensor({f, c, h, w}, 3 * trial + 1);
    MaskSequence masks;
    for (std::size_t i = 0; i < f; ++i) masks.push_back(random_mask(h, w, 3 * trial + 2 + 7 * i, rng.uniform()));
    const Tensor out = localized_blend(edited, content, masks);
    for (std::size_t i = 0; i < f; ++i)
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t p = 0; p < h * w; ++p) {
          const std::size_t j = (i * c + ch) * h * w + p;
          const double got = out[j];
          const double want = masks[i].values[p] ? content[j] : edited[j];
          if (std::memcmp(&got, &want, sizeof(double)) != 0) ++bad;
        }
  }
  report(6, "blending partition", bad == 0, fmt("100 trials, %d elements differ from their source", bad));
}

// 7. Smoothing identities and Horn-Schunck on a 1-px shift.
void smoothing_identities() {
  const Tensor one = uniform_tensor({1, 12, 12, 3}, 7);
  Tensor still({5, 12, 12, 3});
  for (std::size_t f = 0; f < 5; ++f) still.set_slice0(f, one);
  ZeroFlowSource zero(12, 12);
  const double ident = max_abs_diff(sliding_window_smooth(still, 2, zero), still);

  const auto sched = DiffusionSchedule::stable_diffusion(50);
  const Tensor z0 = random_tensor({1, 4, 8, 8}, 8), e0 = random_tensor({1, 4, 8, 8}, 9);
  Tensor z({3, 4, 8, 8}), eps({3, 4, 8, 8});
  for (std::size_t f = 0; f < 3; ++f) {
    z.set_slice0(f, z0);
    eps.set_slice0(f, e0);
  }
  IdentityCodec codec;
  FixedFlowProvider flows(std::make_shared<ZeroFlowSource>(8, 8));
  const SmoothingParams params{2, 25, 30};
  double step_err = 0.0;
  for (int s = 25; s <= 30; ++s) {
    step_err = std::max(step_err, max_abs_diff(smooth_step(z, eps, s, s - 1, codec, sched, params, flows),
                                               ddim_denoise_step(z, eps, s, s - 1, sched)));
  }

  auto image = [](double dx) {
    Tensor t({48, 48, 1});
    for (std::size_t y = 0; y < 48; ++y)
      for (std::size_t x = 0; x < 48; ++x) {
        const double X = static_cast<double>(x) - dx, Y = static_cast<double>(y);
        t[y * 48 + x] = 0.5 + 0.2 * std::sin(2 * std::numbers::pi * X / 23.0) *
                                  std::cos(2 * std::numbers::pi * Y / 19.0) +
                        0.1 * std::sin(2 * std::numbers::pi * (X + Y) / 31.0);
      }
    return t;
  };
  const FlowField f = estimate_flow_hs(image(0.0), image(1.0));
  double epe = 0.0;
  std::size_t n = 0;
  for (std::size_t y = 4; y < 44; ++y)
    for (std::size_t x = 4; x < 44; ++x, ++n) epe += std::hypot(f.u[y * 48 + x] - 1.0, f.v[y * 48 + x]);
  epe /= static_cast<double>(n);

  report(7, "smoothing identities", ident == 0.0 && step_err < 1e-12 && epe < 0.2,
         fmt("identical frames %.3g, smooth_step vs DDIM step %.3g (< 1e-12), HS mean error %.4f px "
             "(< 0.2)",
             ident, step_err, epe));
}

// 8. File format round trips and configuration defaults.
void format_round_trips() {
  TempDir dir("acceptance");
  bool ok = true;
  std::string detail;

  const Tensor t = random_tensor({2, 3, 5, 7}, 80);
  write_npy(t, dir / "t.npy");
  const bool npy = bitwise_equal(read_npy(dir / "t.npy"), t) &&
                   encode_npy(parse_npy(encode_npy(t, Dtype::f64)), Dtype::f64) == encode_npy(t, Dtype::f64);

  FlowField flow = FlowField::zeros(9, 11);
  CounterRng rng = CounterRng::stream(81, "acceptance.flo");
  for (std::size_t i = 0; i < flow.pixels(); ++i) {
    flow.u[i] = static_cast<float>(8.0 * rng.uniform() - 4.0);
    flow.v[i] = static_cast<float>(8.0 * rng.uniform() - 4.0);
  }
  write_flo(flow, dir / "f.flo");
  const FlowField fb = read_flo(dir / "f.flo");
  const bool flo = fb.height == flow.height && fb.width == flow.width &&
                   std::memcmp(fb.u.data(), flow.u.data(), flow.u.size() * sizeof(double)) == 0 &&
                   std::memcmp(fb.v.data(), flow.v.data(), flow.v.size() * sizeof(double)) == 0;

  const Mask m = random_mask(13, 17, 82, 0.4);
  write_mask_png(m, dir / "m.png");
  const bool png = read_mask_png(dir / "m.png") == m;

  const RunConfig c = parse_config("{}");
  const bool defaults = c == RunConfig{} && c.T == 50 && c.step_index(c.tau0) == 5 &&
                        c.step_index(c.tau1) == 10 && c.step_index(c.tau2) == 20 &&
                        c.step_index(c.tau3) == 50 && c.step_index(c.tau4) == 25 &&
                        c.step_index(c.tau5) == 30 && c.step_index(c.t0) == 20 && c.gamma == 0.35 &&
                        c.beta_tau2 == 0.1 && c.beta_tau3 == 0.9 && c.r == 0.3 && c.k == 15 &&
                        c.m == 2 && c.n == 9 && parse_config(dump_config(c)) == c;
  ok = npy && flo && png && defaults;
  detail = fmt("npy %s, flo %s, png mask %s, config defaults %s", npy ? "bitwise" : "differs",
               flo ? "bitwise" : "differs", png ? "bitwise" : "differs", defaults ? "exact" : "differ");
  report(8, "format round trips", ok, detail);
}

// 9. Full mock pipeline run twice.
void end_to_end() {
  StylizeRequest req;
  req.video = random_tensor({16, 4, 64, 64}, 90);
  req.style = random_tensor({1, 4, 64, 64}, 91, 0.7, 0.5);
  Mask first = Mask::filled(64, 64, 0);
  for (std::size_t y = 16; y < 48; ++y)
    for (std::size_t x = 8; x < 40; ++x) first.values[y * 64 + x] = 1;
  req.first_mask = first;
  req.config.seed = 2026;

  double secs[2];
  Tensor out[2];
  for (int i = 0; i < 2; ++i) {
    const auto t0 = Clock::now();
    Backends b = make_backends(req.config, req.video.shape());
    out[i] = run_stylize(req, b).edited;
    secs[i] = seconds_since(t0);
  }
  const bool same = bitwise_equal(out[0], out[1]) && all_finite(out[0]);
  const double worst = std::max(secs[0], secs[1]);
  report(9, "end-to-end determinism", same && worst < 60.0,
         fmt("16 x 4 x 64 x 64, T = 50, m = 2, %s, %.1f s and %.1f s per run on %d thread(s) (< 60 s)",
             same ? "bitwise identical" : "outputs differ", secs[0], secs[1], kernels::max_threads()));
}

}  // namespace

int main() {
  const std::pair<const char*, void (*)()> criteria[] = {
      {"DDIM round trip", ddim_round_trip},
      {"AdaIN moment contract", adain_contract},
      {"mask propagation oracle equivalence", propagation_oracle},
      {"synthetic translation suite", translation_suite},
      {"attention-shift endpoint reductions", attention_endpoints},
      {"blending partition", blend_partition},
      {"smoothing identities", smoothing_identities},
      {"format round trips", format_round_trips},
      {"end-to-end determinism", end_to_end},
  };
  int id = 1;
  for (const auto& [name, fn] : criteria) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, name, false, std::string("threw: ") + e.what());
    }
    ++id;
  }
  std::printf("%d of 9 criteria passed\n", 9 - failures);
  return failures == 0 ? 0 : 1;
}
