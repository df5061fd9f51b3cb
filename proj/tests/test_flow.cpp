// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "support.hpp"
#include "vidstyle/error.hpp"
#include "vidstyle/flow.hpp"
#include "vidstyle/kernels.hpp"
#include "vidstyle/mock_backends.hpp"
#include "vidstyle/scheduler.hpp"

using namespace vidstyle;
using namespace vidstyle::testing;

namespace {

// Smooth 2-D pattern sampled at (x - dx, y - dy): content moved by (dx, dy).
Tensor smooth_image(std::size_t h, std::size_t w, double dx, double dy, std::size_t c = 1) {
  Tensor img({h, w, c});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double X = static_cast<double>(x) - dx, Y = static_cast<double>(y) - dy;
      const double v = 0.5 + 0.2 * std::sin(2 * std::numbers::pi * X / 23.0) *
                                 std::cos(2 * std::numbers::pi * Y / 19.0) +
                       0.1 * std::sin(2 * std::numbers::pi * (X + Y) / 31.0);
      for (std::size_t k = 0; k < c; ++k) img[(y * w + x) * c + k] = v;
    }
  }
  return img;
}

// Integer column shift with clamped source, content moved right by s.
Tensor shift_columns(const Tensor& img, int s) {
  const std::size_t h = img.shape()[0], w = img.shape()[1], c = img.shape()[2];
  Tensor out(img.shape());
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const long sx = std::clamp(static_cast<long>(x) - s, 0L, static_cast<long>(w) - 1);
      for (std::size_t k = 0; k < c; ++k) {
        out[(y * w + x) * c + k] = img[(y * w + static_cast<std::size_t>(sx)) * c + k];
      }
    }
  }
  return out;
}

double mean_over_interior(const std::vector<double>& f, std::size_t h, std::size_t w, std::size_t b) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t y = b; y + b < h; ++y)
    for (std::size_t x = b; x + b < w; ++x) {
      s += f[y * w + x];
      ++n;
    }
  return s / static_cast<double>(n);
}

Tensor stack(const std::vector<Tensor>& frames) {
  Shape s{frames.size()};
  for (std::size_t d : frames[0].shape()) s.push_back(d);
  Tensor out(s);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::copy(frames[i].data().begin(), frames[i].data().end(), out.row0(i).begin());
  }
  return out;
}

Tensor frame(const Tensor& video, std::size_t i) {
  Shape s(video.shape().begin() + 1, video.shape().end());
  const auto r = video.row0(i);
  return Tensor(s, std::vector<double>(r.begin(), r.end()));
}

}  // namespace

TEST_CASE("Horn-Schunck on identical and flat frames") {
  const Tensor a = smooth_image(32, 40, 0, 0, 3);
  const FlowField f = estimate_flow_hs(a, a);
  double worst = 0.0;
  for (std::size_t i = 0; i < f.pixels(); ++i) worst = std::max({worst, std::abs(f.u[i]), std::abs(f.v[i])});
  CHECK(worst < 1e-3);

  const Tensor flat({16, 16, 1}, 0.4);
  const FlowField z = estimate_flow_hs(flat, flat);
  for (std::size_t i = 0; i < z.pixels(); ++i) {
    CHECK(z.u[i] == 0.0);
    CHECK(z.v[i] == 0.0);
  }
  CHECK_THROWS_AS(estimate_flow_hs(a, flat), ShapeError);
  CHECK_THROWS_AS(estimate_flow_hs(a, a, {0.0, 10, 1, 1, 1.0}), Error);
}

TEST_CASE("Horn-Schunck recovers a one pixel translation") {
  const Tensor a = smooth_image(48, 48, 0, 0);
  const Tensor b = smooth_image(48, 48, 1, 0);
  const FlowField f = estimate_flow_hs(a, b);
  const double mu = mean_over_interior(f.u, 48, 48, 4);
  const double mv = mean_over_interior(f.v, 48, 48, 4);
  double err = 0.0;
  std::size_t n = 0;
  for (std::size_t y = 4; y < 44; ++y)
    for (std::size_t x = 4; x < 44; ++x) {
      const std::size_t i = y * 48 + x;
      err += std::hypot(f.u[i] - 1.0, f.v[i]);
      ++n;
    }
  MESSAGE("mean flow (" << mu << ", " << mv << "), mean endpoint error " << err / static_cast<double>(n));
  CHECK(std::abs(mu - 1.0) < 0.2);
  CHECK(std::abs(mv) < 0.2);
  CHECK(err / static_cast<double>(n) < 0.2);

  const Tensor c = smooth_image(48, 48, 0, -1);
  const FlowField g = estimate_flow_hs(a, c);
  CHECK(std::abs(mean_over_interior(g.v, 48, 48, 4) + 1.0) < 0.2);
}

TEST_CASE("Horn-Schunck parallel and serial kernels agree bitwise") {
  const Tensor a = smooth_image(40, 36, 0, 0, 2);
  const Tensor b = smooth_image(40, 36, 0.7, -0.4, 2);
  const FlowField p = estimate_flow_hs(a, b);
  const FlowField s = estimate_flow_hs_serial(a, b);
  CHECK(p.u == s.u);
  CHECK(p.v == s.v);
}

TEST_CASE("occlusion from forward-backward consistency") {
  const FlowField zero = FlowField::zeros(6, 6);
  for (auto o : occlusion_mask(zero, zero)) CHECK(o == 0);
  const FlowField fwd = FlowField::constant(6, 6, 1.5, -0.5);
  const FlowField bwd = FlowField::constant(6, 6, -1.5, 0.5);
  for (auto o : occlusion_mask(fwd, bwd)) CHECK(o == 0);
  const FlowField big = FlowField::constant(6, 6, 5.0, 0.0);
  for (auto o : occlusion_mask(big, big)) CHECK(o == 1);
  FlowField flagged = zero;
  flagged.occluded[7] = 1;
  CHECK(occlusion_mask(flagged, zero)[7] == 1);
  CHECK_THROWS_AS(occlusion_mask(zero, FlowField::zeros(5, 6)), ShapeError);
}

TEST_CASE("warp") {
  const Tensor a = uniform_tensor({5, 7, 3}, 1);
  const Tensor b = uniform_tensor({5, 7, 3}, 2);
  CHECK(bitwise_equal(warp(a, b, FlowField::zeros(5, 7)), b));
  FlowField occ = FlowField::constant(5, 7, 0.3, 0.2);
  std::fill(occ.occluded.begin(), occ.occluded.end(), std::uint8_t{1});
  CHECK(bitwise_equal(warp(a, b, occ), a));

  // b is a moved right by 2 columns; the a->b flow is (+2, 0)
  const Tensor shifted = shift_columns(a, 2);
  const Tensor back = warp(a, shifted, FlowField::constant(5, 7, 2.0, 0.0));
  for (std::size_t y = 0; y < 5; ++y)
    for (std::size_t x = 0; x + 2 < 7; ++x)
      for (std::size_t k = 0; k < 3; ++k) CHECK(back.at({y, x, k}) == a.at({y, x, k}));

  CHECK(bitwise_equal(warp(a, a, FlowField::zeros(5, 7)), a));
  CHECK_THROWS_AS(warp(a, b, FlowField::zeros(4, 7)), ShapeError);
}

TEST_CASE("warp with estimated flow aligns a translated frame") {
  const Tensor a = smooth_image(32, 32, 0, 0, 3);
  const Tensor b = smooth_image(32, 32, 1, 0, 3);
  const Tensor w = warp(a, b, HornSchunckParams{});
  double before = 0.0, after = 0.0;
  for (std::size_t y = 4; y < 28; ++y)
    for (std::size_t x = 4; x < 28; ++x) {
      before += std::abs(b.at({y, x, 0}) - a.at({y, x, 0}));
      after += std::abs(w.at({y, x, 0}) - a.at({y, x, 0}));
    }
  CHECK(after < 0.2 * before);
}

TEST_CASE("warp kernels agree bitwise with the serial reference") {
  const Tensor a = uniform_tensor({33, 29, 3}, 4);
  const Tensor b = uniform_tensor({33, 29, 3}, 5);
  FlowField f = FlowField::zeros(33, 29);
  CounterRng rng = CounterRng::stream(6, "flow");
  for (std::size_t i = 0; i < f.pixels(); ++i) {
    f.u[i] = 6 * rng.uniform() - 3;
    f.v[i] = 6 * rng.uniform() - 3;
    f.occluded[i] = rng.uniform() < 0.1;
  }
  Tensor p, s;
  kernels::warp_frame(a, b, f, p);
  kernels::serial::warp_frame(a, b, f, s);
  CHECK(bitwise_equal(p, s));
}

TEST_CASE("sliding window smoothing hand cases") {
  const Tensor f0 = uniform_tensor({4, 5, 2}, 10);
  const Tensor f1 = uniform_tensor({4, 5, 2}, 11);
  const Tensor f2 = uniform_tensor({4, 5, 2}, 12);
  const Tensor video = stack({f0, f1, f2});
  ZeroFlowSource zero(4, 5);

  CHECK(bitwise_equal(sliding_window_smooth(video, 0, zero), video));
  CHECK_THROWS_AS(sliding_window_smooth(video, -1, zero), Error);

  // m = 1 with zero flow: frames are replaced in order, each using the
  // already-smoothed predecessor.
  const Tensor out = sliding_window_smooth(video, 1, zero);
  const Tensor s0 = scaled(f0 + f1, 0.5);
  const Tensor s1 = scaled(s0 + f1 + f2, 1.0 / 3.0);
  const Tensor s2 = scaled(s1 + f2, 0.5);
  CHECK(max_abs_diff(frame(out, 0), s0) < 1e-15);
  CHECK(max_abs_diff(frame(out, 1), s1) < 1e-15);
  CHECK(max_abs_diff(frame(out, 2), s2) < 1e-15);

  // constant video is preserved exactly
  const Tensor same = stack({f0, f0, f0, f0});
  CHECK(bitwise_equal(sliding_window_smooth(same, 2, zero), same));

  // window larger than the video divides by the members that exist
  const Tensor wide = sliding_window_smooth(video, 5, zero);
  CHECK(max_abs_diff(frame(wide, 0), scaled(f0 + f1 + f2, 1.0 / 3.0)) < 1e-15);
}

TEST_CASE("sliding window smoothing of a translating pattern with exact flows") {
  // Frame j is the base pattern moved right by j columns; the flow i -> j
  // is (j - i, 0), so every warped neighbour equals frame i on the interior.
  const Tensor base = uniform_tensor({4, 12, 1}, 13);
  std::vector<Tensor> frames;
  for (int j = 0; j < 3; ++j) frames.push_back(shift_columns(base, j));
  const Tensor video = stack(frames);
  TableFlowSource flows;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      flows.set(i, j, FlowField::constant(4, 12, static_cast<double>(j) - static_cast<double>(i), 0.0));
  const Tensor out = sliding_window_smooth(video, 1, flows);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 3; x + 3 < 12; ++x) {
        CHECK(std::abs(out.at({i, y, x, 0}) - video.at({i, y, x, 0})) < 1e-15);
      }
  }
}

TEST_CASE("sliding window smoothing stays within the input range") {
  const Tensor video = uniform_tensor({6, 8, 8, 3}, 14);
  TableFlowSource flows;
  CounterRng rng = CounterRng::stream(15, "flows");
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      FlowField f = FlowField::zeros(8, 8);
      for (std::size_t p = 0; p < f.pixels(); ++p) {
        f.u[p] = 4 * rng.uniform() - 2;
        f.v[p] = 4 * rng.uniform() - 2;
      }
      flows.set(i, j, f);
    }
  const Tensor out = sliding_window_smooth(video, 2, flows);
  const auto [lo, hi] = std::minmax_element(video.data().begin(), video.data().end());
  for (double v : out.data()) {
    CHECK(v >= *lo - 1e-12);
    CHECK(v <= *hi + 1e-12);
  }
  TableFlowSource empty;
  CHECK_THROWS_AS(sliding_window_smooth(video, 1, empty), Error);
}

TEST_CASE("precomputed flow directory") {
  TempDir dir("flows");
  const FlowField f = FlowField::constant(4, 4, 1.0, 0.0);
  const FlowField g = FlowField::constant(4, 4, -1.0, 0.0);
  write_flo(f, PrecomputedFlowSource::forward_path(dir.path(), 0, 1));
  write_flo(g, PrecomputedFlowSource::backward_path(dir.path(), 0, 1));
  CHECK(PrecomputedFlowSource::forward_path(dir.path(), 3, 12).filename() == "fwd_00003_00012.flo");
  PrecomputedFlowSource src(dir.path());
  const FlowField a = src.flow(0, 1);
  const FlowField b = src.flow(1, 0);
  CHECK(a.u == f.u);
  CHECK(b.u == g.u);
  for (auto o : a.occluded) CHECK(o == 0);
  CHECK_THROWS_AS(src.flow(1, 2), FormatError);
}

TEST_CASE("Horn-Schunck flow source and provider") {
  const Tensor video = stack({smooth_image(16, 16, 0, 0, 3), smooth_image(16, 16, 1, 0, 3)});
  HornSchunckFlowSource src(video, {});
  const FlowField f01 = src.flow(0, 1);
  const FlowField f10 = src.flow(1, 0);
  CHECK(mean_over_interior(f01.u, 16, 16, 3) > 0.5);
  CHECK(mean_over_interior(f10.u, 16, 16, 3) < -0.5);
  CHECK(src.flow(0, 1).u == f01.u);

  HornSchunckFlowProvider once({}, false), every({}, true);
  once.source_for(video);
  once.source_for(video);
  every.source_for(video);
  every.source_for(video);
  CHECK(once.estimations() == 1);
  CHECK(every.estimations() == 2);
}

TEST_CASE("smooth_step reductions") {
  const auto sched = DiffusionSchedule::stable_diffusion(50);
  const Tensor z = random_tensor({3, 4, 6, 6}, 20);
  const Tensor eps = random_tensor({3, 4, 6, 6}, 21);
  const SmoothingParams params{2, 25, 30};
  IdentityCodec id;
  FixedFlowProvider zero(std::make_shared<ZeroFlowSource>(6, 6));

  // outside the window: the plain step, bitwise
  CHECK(bitwise_equal(smooth_step(z, eps, 40, 39, id, sched, params, zero),
                      ddim_denoise_step(z, eps, 40, 39, sched)));

  // identical frames + zero flow: smoothing is the identity
  Tensor same({3, 4, 6, 6});
  Tensor same_eps({3, 4, 6, 6});
  for (std::size_t f = 0; f < 3; ++f) {
    same.set_slice0(f, z.slice0(0));
    same_eps.set_slice0(f, eps.slice0(0));
  }
  CHECK(max_abs_diff(smooth_step(same, same_eps, 27, 26, id, sched, params, zero),
                     ddim_denoise_step(same, same_eps, 27, 26, sched)) < 1e-12);

  // m = 0 through the orthogonal codec
  OrthogonalCodec q(4, 3);
  const SmoothingParams m0{0, 25, 30};
  CHECK(max_abs_diff(smooth_step(z, eps, 28, 27, q, sched, m0, zero),
                     ddim_denoise_step(z, eps, 28, 27, sched)) < 1e-10);

  // smoothing active: result equals the explicit composition
  const Tensor z0 = predicted_z0(z, eps, 26, sched);
  ZeroFlowSource zs(6, 6);
  const Tensor zbar = q.encode(sliding_window_smooth(q.decode(z0), 2, zs));
  const Tensor eb = refine_noise(z, zbar, 26, sched);
  const double ab = sched.alpha_bar(25);
  const Tensor want = axpby(std::sqrt(ab), zbar, std::sqrt(1 - ab), eb);
  CHECK(bitwise_equal(smooth_step(z, eps, 26, 25, q, sched, params, zero), want));
  CHECK(max_abs_diff(want, ddim_denoise_step(z, eps, 26, 25, sched)) > 1e-3);
}
