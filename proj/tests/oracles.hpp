// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

// Reference implementations shared by the unit tests and the acceptance
// binary. They favour the most direct formulation over speed.

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "vidstyle/mask.hpp"
#include "vidstyle/rng.hpp"
#include "vidstyle/tensor.hpp"

namespace vidstyle::testing {

inline double oracle_cosine(const double* a, const double* b, std::size_t d) {
  double dot = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    dot += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  const double na = std::sqrt(aa), nb = std::sqrt(bb);
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

// Full-rate propagation with every previous frame kept as an anchor frame:
// each query is compared against every labelled point of every earlier frame.
// Anchor order (used for equal similarities) is frames 1..i-1 then frame 0,
// foreground points before background points within a frame.
inline MaskSequence brute_force_propagate(const Tensor& features, const Mask& first,
                                          std::size_t k) {
  const std::size_t frames = features.shape()[0];
  const std::size_t px = features.shape()[1] * features.shape()[2];
  const std::size_t d = features.shape()[3];
  MaskSequence out{first};
  for (std::size_t i = 1; i < frames; ++i) {
    std::vector<const double*> anchor_rows;
    std::vector<std::uint8_t> anchor_labels;
    auto add_frame = [&](std::size_t f) {
      for (int want : {1, 0}) {
        for (std::size_t p = 0; p < px; ++p) {
          if ((out[f].values[p] != 0) != (want == 1)) continue;
          anchor_rows.push_back(features.data().data() + (f * px + p) * d);
          anchor_labels.push_back(out[f].values[p]);
        }
      }
    };
    for (std::size_t f = 1; f < i; ++f) add_frame(f);
    add_frame(0);

    Mask m = Mask::filled(first.height, first.width, 0);
    std::vector<double> sims(anchor_rows.size());
    std::vector<std::size_t> order(anchor_rows.size());
    for (std::size_t p = 0; p < px; ++p) {
      const double* q = features.data().data() + (i * px + p) * d;
      for (std::size_t a = 0; a < anchor_rows.size(); ++a) sims[a] = oracle_cosine(q, anchor_rows[a], d);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t x, std::size_t y) { return sims[x] > sims[y]; });
      const std::size_t kk = std::min(k, order.size());
      std::size_t fg = 0;
      for (std::size_t j = 0; j < kk; ++j) fg += anchor_labels[order[j]];
      m.values[p] = 2 * fg > kk ? 1 : 0;
    }
    out.push_back(std::move(m));
  }
  return out;
}

// Circularly translating scene on an h x w torus. Features are Fourier
// position codes (all integer frequencies with |kx|, |ky| <= 2) with random
// phases, so cosine similarity depends only on the displacement and peaks at
// zero. Frame i is frame 0 shifted right by i * step columns; the mask is a
// vertical band moving with it. A nonzero `drift` perturbs the appearance a
// little more in every frame.
struct TranslationScene {
  Tensor features;       // frames x h x w x d
  MaskSequence truth;    // frames of h x w
};

inline TranslationScene translation_scene(std::size_t frames, std::size_t h, std::size_t w,
                                          std::size_t band_width, std::uint64_t seed,
                                          std::size_t step = 1, double drift = 0.0, int kmax = 2) {
  CounterRng rng = CounterRng::stream(seed, "test.scene");
  struct Freq {
    int kx, ky;
    double phase;
  };
  std::vector<Freq> freqs;
  for (int ky = -kmax; ky <= kmax; ++ky) {
    for (int kx = -kmax; kx <= kmax; ++kx) {
      if (ky < 0 || (ky == 0 && kx <= 0)) continue;
      freqs.push_back({kx, ky, 2.0 * std::numbers::pi * rng.uniform()});
    }
  }
  const std::size_t d = 2 * freqs.size() + 1;
  const std::size_t band0 = static_cast<std::size_t>(rng.below(w));

  TranslationScene s;
  s.features = Tensor({frames, h, w, d});
  // Appearance drift: a per-position random walk in world coordinates.
  CounterRng noise = CounterRng::stream(seed, "test.scene.drift");
  std::vector<double> walk(h * w * d, 0.0);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t shift = f * step;
    Mask m = Mask::filled(h, w, 0);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t src_x = (x + w * frames * step - shift) % w;
        double* row = s.features.data().data() + ((f * h + y) * w + x) * d;
        for (std::size_t q = 0; q < freqs.size(); ++q) {
          const double arg = 2.0 * std::numbers::pi *
                                 (freqs[q].kx * static_cast<double>(src_x) / static_cast<double>(w) +
                                  freqs[q].ky * static_cast<double>(y) / static_cast<double>(h)) +
                             freqs[q].phase;
          row[2 * q] = std::cos(arg);
          row[2 * q + 1] = std::sin(arg);
        }
        row[d - 1] = 1.0;
        for (std::size_t j = 0; j < d; ++j) row[j] += walk[(y * w + src_x) * d + j];
        m.values[y * w + x] = (src_x + w - band0) % w < band_width ? 1 : 0;
      }
    }
    if (drift > 0.0) {
      for (double& v : walk) v += drift * noise.normal();
    }
    s.truth.push_back(std::move(m));
  }
  return s;
}

}  // namespace vidstyle::testing
