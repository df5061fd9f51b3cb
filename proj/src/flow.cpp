// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "vidstyle/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "vidstyle/error.hpp"
#include "vidstyle/kernels.hpp"

namespace vidstyle {

namespace {

using SweepFn = void (*)(std::size_t, std::size_t, std::span<const double>, std::span<const double>,
                         std::span<const double>, double, std::span<const double>,
                         std::span<const double>, std::span<double>, std::span<double>);

struct Plane {
  std::size_t h = 0, w = 0;
  std::vector<double> v;

  double at(std::size_t y, std::size_t x) const { return v[y * w + x]; }
};

Plane to_gray(const Tensor& img, double scale) {
  if (img.rank() != 3 || img.shape()[2] == 0) {
    throw ShapeError("flow: frames must be H x W x C, got " + shape_str(img.shape()));
  }
  const std::size_t h = img.shape()[0], w = img.shape()[1], c = img.shape()[2];
  Plane p{h, w, std::vector<double>(h * w)};
  for (std::size_t i = 0; i < h * w; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < c; ++k) s += img[i * c + k];
    p.v[i] = scale * s / static_cast<double>(c);
  }
  return p;
}

Plane halve(const Plane& p) {
  Plane q{p.h / 2, p.w / 2, {}};
  q.v.resize(q.h * q.w);
  for (std::size_t y = 0; y < q.h; ++y) {
    for (std::size_t x = 0; x < q.w; ++x) {
      q.v[y * q.w + x] = 0.25 * (p.at(2 * y, 2 * x) + p.at(2 * y, 2 * x + 1) +
                                 p.at(2 * y + 1, 2 * x) + p.at(2 * y + 1, 2 * x + 1));
    }
  }
  return q;
}

double sample(const Plane& p, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(p.w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(p.h - 1));
  const auto x0 = static_cast<std::size_t>(std::floor(x));
  const auto y0 = static_cast<std::size_t>(std::floor(y));
  const std::size_t x1 = std::min(x0 + 1, p.w - 1);
  const std::size_t y1 = std::min(y0 + 1, p.h - 1);
  const double fx = x - static_cast<double>(x0);
  const double fy = y - static_cast<double>(y0);
  const double top = (1.0 - fx) * p.at(y0, x0) + fx * p.at(y0, x1);
  const double bot = (1.0 - fx) * p.at(y1, x0) + fx * p.at(y1, x1);
  return (1.0 - fy) * top + fy * bot;
}

void gradients(const Plane& p, std::vector<double>& gx, std::vector<double>& gy) {
  gx.resize(p.v.size());
  gy.resize(p.v.size());
  for (std::size_t y = 0; y < p.h; ++y) {
    const std::size_t ym = y > 0 ? y - 1 : 0, yp = std::min(y + 1, p.h - 1);
    for (std::size_t x = 0; x < p.w; ++x) {
      const std::size_t xm = x > 0 ? x - 1 : 0, xp = std::min(x + 1, p.w - 1);
      gx[y * p.w + x] = 0.5 * (p.at(y, xp) - p.at(y, xm));
      gy[y * p.w + x] = 0.5 * (p.at(yp, x) - p.at(ym, x));
    }
  }
}

// Flow at one pyramid level, refining (u, v) in place.
void refine_level(const Plane& a, const Plane& b, std::vector<double>& u, std::vector<double>& v,
                  const HornSchunckParams& params, SweepFn sweep) {
  const std::size_t n = a.v.size();
  const int warps = std::max(1, params.warps);
  const int sweeps = params.iterations / warps;
  std::vector<double> ax, ay, bx, by, ix(n), iy(n), c(n), u2(n), v2(n);
  gradients(a, ax, ay);
  Plane bw{a.h, a.w, std::vector<double>(n)};
  for (int wi = 0; wi < warps; ++wi) {
    for (std::size_t y = 0; y < a.h; ++y) {
      for (std::size_t x = 0; x < a.w; ++x) {
        const std::size_t i = y * a.w + x;
        bw.v[i] = sample(b, static_cast<double>(x) + u[i], static_cast<double>(y) + v[i]);
      }
    }
    gradients(bw, bx, by);
    for (std::size_t i = 0; i < n; ++i) {
      ix[i] = 0.5 * (ax[i] + bx[i]);
      iy[i] = 0.5 * (ay[i] + by[i]);
      c[i] = (bw.v[i] - a.v[i]) - ix[i] * u[i] - iy[i] * v[i];
    }
    for (int it = 0; it < sweeps; ++it) {
      sweep(a.h, a.w, ix, iy, c, params.lambda, u, v, u2, v2);
      u.swap(u2);
      v.swap(v2);
    }
  }
}

FlowField estimate_with(const Tensor& a, const Tensor& b, const HornSchunckParams& params,
                        SweepFn sweep) {
  if (!a.same_shape(b)) {
    throw ShapeError("flow: frame sizes differ, " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
  if (!(params.lambda > 0.0)) throw Error("flow: lambda must be > 0");
  if (params.iterations < 0 || params.levels < 1) throw Error("flow: bad iteration settings");

  std::vector<Plane> pa{to_gray(a, params.intensity_scale)};
  std::vector<Plane> pb{to_gray(b, params.intensity_scale)};
  while (static_cast<int>(pa.size()) < params.levels && std::min(pa.back().h, pa.back().w) >= 16) {
    pa.push_back(halve(pa.back()));
    pb.push_back(halve(pb.back()));
  }

  std::vector<double> u(pa.back().v.size(), 0.0), v(u.size(), 0.0);
  for (std::size_t li = pa.size(); li-- > 0;) {
    const Plane& la = pa[li];
    if (li + 1 < pa.size()) {
      // upsample the coarser estimate and double the displacement
      const Plane& coarse = pa[li + 1];
      Plane cu{coarse.h, coarse.w, std::move(u)}, cv{coarse.h, coarse.w, std::move(v)};
      u.assign(la.v.size(), 0.0);
      v.assign(la.v.size(), 0.0);
      for (std::size_t y = 0; y < la.h; ++y) {
        for (std::size_t x = 0; x < la.w; ++x) {
          const double cx = (static_cast<double>(x) + 0.5) * 0.5 - 0.5;
          const double cy = (static_cast<double>(y) + 0.5) * 0.5 - 0.5;
          u[y * la.w + x] = 2.0 * sample(cu, cx, cy);
          v[y * la.w + x] = 2.0 * sample(cv, cx, cy);
        }
      }
    }
    refine_level(la, pb[li], u, v, params, sweep);
  }

  FlowField f = FlowField::zeros(pa[0].h, pa[0].w);
  f.u = std::move(u);
  f.v = std::move(v);
  return f;
}

void check_flow(const FlowField& f, const char* what) {
  if (f.u.size() != f.pixels() || f.v.size() != f.pixels() || f.occluded.size() != f.pixels()) {
    throw ShapeError(std::string(what) + ": inconsistent flow field");
  }
}

Tensor uv_image(const FlowField& f) {
  Tensor t({f.height, f.width, 2});
  for (std::size_t i = 0; i < f.pixels(); ++i) {
    t[2 * i] = f.u[i];
    t[2 * i + 1] = f.v[i];
  }
  return t;
}

Tensor frame_of(const Tensor& video, std::size_t i) {
  const Shape& s = video.shape();
  const auto row = video.row0(i);
  return Tensor({s[1], s[2], s[3]}, std::vector<double>(row.begin(), row.end()));
}

}  // namespace

FlowField estimate_flow_hs(const Tensor& a, const Tensor& b, const HornSchunckParams& params) {
  return estimate_with(a, b, params, &kernels::hs_sweep);
}

FlowField estimate_flow_hs_serial(const Tensor& a, const Tensor& b,
                                  const HornSchunckParams& params) {
  return estimate_with(a, b, params, &kernels::serial::hs_sweep);
}

std::vector<std::uint8_t> occlusion_mask(const FlowField& fwd, const FlowField& bwd) {
  check_flow(fwd, "occlusion_mask");
  check_flow(bwd, "occlusion_mask");
  if (fwd.height != bwd.height || fwd.width != bwd.width) {
    throw ShapeError("occlusion_mask: forward and backward flows differ in size");
  }
  const Tensor g = uv_image(bwd);
  std::vector<std::uint8_t> occ(fwd.pixels(), 0);
  double gv[2];
  for (std::size_t y = 0; y < fwd.height; ++y) {
    for (std::size_t x = 0; x < fwd.width; ++x) {
      const std::size_t i = y * fwd.width + x;
      if (fwd.occluded[i]) {
        occ[i] = 1;
        continue;
      }
      const double fu = fwd.u[i], fv = fwd.v[i];
      bilinear_sample(g, static_cast<double>(x) + fu, static_cast<double>(y) + fv, gv);
      const double su = fu + gv[0], sv = fv + gv[1];
      const double lhs = su * su + sv * sv;
      const double rhs = 0.01 * (fu * fu + fv * fv + gv[0] * gv[0] + gv[1] * gv[1]) + 0.5;
      occ[i] = lhs > rhs ? 1 : 0;
    }
  }
  return occ;
}

Tensor warp(const Tensor& a, const Tensor& b, const FlowField& flow_ab) {
  Tensor out;
  kernels::warp_frame(a, b, flow_ab, out);
  return out;
}

Tensor warp(const Tensor& a, const Tensor& b, const HornSchunckParams& params) {
  FlowField fwd = estimate_flow_hs(a, b, params);
  const FlowField bwd = estimate_flow_hs(b, a, params);
  fwd.occluded = occlusion_mask(fwd, bwd);
  return warp(a, b, fwd);
}

FlowField TableFlowSource::flow(std::size_t from, std::size_t to) {
  const auto it = table_.find({from, to});
  if (it == table_.end()) {
    throw Error("no flow for frame pair " + std::to_string(from) + " -> " + std::to_string(to));
  }
  return it->second;
}

std::filesystem::path PrecomputedFlowSource::forward_path(const std::filesystem::path& dir,
                                                          std::size_t i, std::size_t j) {
  char name[48];
  std::snprintf(name, sizeof name, "fwd_%05zu_%05zu.flo", i, j);
  return dir / name;
}

std::filesystem::path PrecomputedFlowSource::backward_path(const std::filesystem::path& dir,
                                                           std::size_t i, std::size_t j) {
  char name[48];
  std::snprintf(name, sizeof name, "bwd_%05zu_%05zu.flo", i, j);
  return dir / name;
}

FlowField PrecomputedFlowSource::flow(std::size_t from, std::size_t to) {
  const std::size_t i = std::min(from, to), j = std::max(from, to);
  std::filesystem::path main = forward_path(dir_, i, j);
  std::filesystem::path partner = backward_path(dir_, i, j);
  if (from > to) std::swap(main, partner);
  if (!std::filesystem::exists(main)) throw FormatError("missing flow file " + main.string());
  FlowField f = read_flo(main);
  if (std::filesystem::exists(partner)) f.occluded = occlusion_mask(f, read_flo(partner));
  return f;
}

Tensor HornSchunckFlowSource::frame(std::size_t i) const {
  if (frames_.rank() != 4 || i >= frames_.shape()[0]) throw Error("flow source: frame out of range");
  return frame_of(frames_, i);
}

FlowField HornSchunckFlowSource::flow(std::size_t from, std::size_t to) {
  if (const auto it = cache_.find({from, to}); it != cache_.end()) return it->second;
  const Tensor a = frame(from), b = frame(to);
  FlowField fwd = estimate_flow_hs(a, b, params_);
  FlowField bwd = estimate_flow_hs(b, a, params_);
  const auto occ_fwd = occlusion_mask(fwd, bwd);
  bwd.occluded = occlusion_mask(bwd, fwd);
  fwd.occluded = occ_fwd;
  cache_[{to, from}] = std::move(bwd);
  return cache_[{from, to}] = std::move(fwd);
}

Tensor sliding_window_smooth(const Tensor& frames, int m, FlowSource& flows) {
  if (m < 0) throw Error("sliding_window_smooth: m must be >= 0");
  if (frames.rank() != 4) {
    throw ShapeError("sliding_window_smooth: expected frames x H x W x C, got " +
                     shape_str(frames.shape()));
  }
  Tensor out = frames;
  const std::size_t n = frames.shape()[0];
  const auto half = static_cast<std::size_t>(m);
  Tensor warped;
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor a = frame_of(out, i);
    const std::size_t lo = i > half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    std::vector<double> acc(a.size(), 0.0);
    std::size_t members = 1;
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j == i) continue;
      kernels::warp_frame(a, frame_of(out, j), flows.flow(i, j), warped);
      for (std::size_t p = 0; p < acc.size(); ++p) acc[p] += warped[p] - a[p];
      ++members;
    }
    auto dst = out.row0(i);
    const double inv = static_cast<double>(members);
    for (std::size_t p = 0; p < acc.size(); ++p) dst[p] = a[p] + acc[p] / inv;
  }
  return out;
}

FlowSource& HornSchunckFlowProvider::source_for(const Tensor& decoded) {
  if (!source_ || reflow_) {
    source_ = std::make_unique<HornSchunckFlowSource>(decoded, params_);
    ++estimations_;
  }
  return *source_;
}

Tensor smooth_step(const Tensor& z_t, const Tensor& eps, int step, int step_prev,
                   LatentCodec& codec, const DiffusionSchedule& sched,
                   const SmoothingParams& params, FlowProvider& flows) {
  if (!params.active(step)) return ddim_denoise_step(z_t, eps, step, step_prev, sched);
  if (step_prev >= step) throw Error("smooth_step: step_prev must precede step");
  const Tensor z0 = predicted_z0(z_t, eps, step, sched);
  const Tensor pixels = codec.decode(z0);
  const Tensor smoothed = sliding_window_smooth(pixels, params.m, flows.source_for(pixels));
  const Tensor zbar = codec.encode(smoothed);
  if (!zbar.same_shape(z_t)) {
    throw ShapeError("smooth_step: codec returned " + shape_str(zbar.shape()) + " for latent " +
                     shape_str(z_t.shape()));
  }
  const Tensor eps_bar = refine_noise(z_t, zbar, step, sched);
  const double ab = sched.alpha_bar(step_prev);
  return axpby(std::sqrt(ab), zbar, std::sqrt(1.0 - ab), eps_bar);
}

}  // namespace vidstyle
