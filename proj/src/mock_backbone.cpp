// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "vidstyle/mock_backbone.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vidstyle/error.hpp"
#include "vidstyle/rng.hpp"
#include "vidstyle/scheduler.hpp"

namespace vidstyle {

namespace {

std::vector<double> gaussian_matrix(CounterRng& rng, std::size_t rows, std::size_t cols) {
  std::vector<double> m(rows * cols);
  const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
  for (double& x : m) x = rng.normal() * scale;
  return m;
}

}  // namespace

MockBackbone::MockBackbone(MockBackboneParams params) : params_(params) {
  const auto& p = params_;
  if (p.channels == 0 || p.model_dim == 0 || p.heads == 0 || p.model_dim % p.heads != 0) {
    throw Error("mock backbone: model_dim must be a positive multiple of heads");
  }
  if (p.layers == 0 || p.pool == 0) throw Error("mock backbone: layers and pool must be >= 1");
  CounterRng rng = CounterRng::stream(p.seed, "mock.backbone");
  w_in_ = gaussian_matrix(rng, p.channels, p.model_dim);
  w_out_ = gaussian_matrix(rng, p.model_dim, p.channels);
  t_freq_.resize(p.model_dim);
  t_phase_.resize(p.model_dim);
  for (std::size_t d = 0; d < p.model_dim; ++d) {
    t_freq_[d] = std::pow(1000.0, -static_cast<double>(d) / static_cast<double>(p.model_dim));
    t_phase_[d] = 6.283185307179586 * rng.uniform();
  }
  for (std::size_t l = 0; l < p.layers; ++l) {
    Layer layer;
    layer.wq = gaussian_matrix(rng, p.model_dim, p.model_dim);
    layer.wk = gaussian_matrix(rng, p.model_dim, p.model_dim);
    layer.wv = gaussian_matrix(rng, p.model_dim, p.model_dim);
    layer.wo = gaussian_matrix(rng, p.model_dim, p.model_dim);
    blocks_.push_back(std::move(layer));
  }
}

std::size_t MockBackbone::pool_for(std::size_t height, std::size_t width) {
  std::size_t pool = 1;
  while ((height / pool > 16 || width / pool > 16) && height % (2 * pool) == 0 &&
         width % (2 * pool) == 0) {
    pool *= 2;
  }
  return pool;
}

std::vector<std::size_t> MockBackbone::up_block_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t l = params_.layers / 2; l < params_.layers; ++l) out.push_back(l);
  return out;
}

Tensor MockBackbone::predict_hooked(const Tensor& z, int timestep, const Conditioning&,
                                    AttentionHook* hook) {
  return forward(z, timestep, hook).first;
}

std::pair<Tensor, Tensor> MockBackbone::predict_with_features(const Tensor& z, int timestep,
                                                              const Conditioning&) {
  return forward(z, timestep, nullptr);
}

std::pair<Tensor, Tensor> MockBackbone::forward(const Tensor& z, int timestep, AttentionHook* hook) {
  const auto& p = params_;
  if (z.rank() != 4 || z.shape()[1] != p.channels) {
    throw ShapeError("mock backbone: expected frames x " + std::to_string(p.channels) +
                     " x H x W, got " + shape_str(z.shape()));
  }
  const std::size_t frames = z.shape()[0], c = p.channels;
  const std::size_t height = z.shape()[2], width = z.shape()[3];
  if (frames == 0 || height % p.pool != 0 || width % p.pool != 0 || height == 0 || width == 0) {
    throw ShapeError("mock backbone: latent " + shape_str(z.shape()) + " not divisible by pool " +
                     std::to_string(p.pool));
  }
  const std::size_t th = height / p.pool, tw = width / p.pool, n = th * tw;
  const std::size_t dm = p.model_dim, heads = p.heads, dh = dm / heads;

  // embed pooled tokens
  Tensor h({frames, th, tw, dm});
  const double inv_area = 1.0 / static_cast<double>(p.pool * p.pool);
  std::vector<double> pooled(c);
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t ty = 0; ty < th; ++ty) {
      for (std::size_t tx = 0; tx < tw; ++tx) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          double s = 0.0;
          for (std::size_t y = ty * p.pool; y < (ty + 1) * p.pool; ++y) {
            for (std::size_t x = tx * p.pool; x < (tx + 1) * p.pool; ++x) {
              s += z[((f * c + ch) * height + y) * width + x];
            }
          }
          pooled[ch] = s * inv_area;
        }
        double* row = h.data().data() + ((f * th + ty) * tw + tx) * dm;
        for (std::size_t d = 0; d < dm; ++d) {
          double s = 0.1 * std::sin(static_cast<double>(timestep) * t_freq_[d] + t_phase_[d]);
          for (std::size_t ch = 0; ch < c; ++ch) s += pooled[ch] * w_in_[ch * dm + d];
          row[d] = s;
        }
      }
    }
  }

  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    const Layer& L = blocks_[l];
    AttentionPacket pkt{Tensor({frames, heads, n, dh}), Tensor({frames, heads, n, dh}),
                        Tensor({frames, heads, n, dh})};
    for (std::size_t f = 0; f < frames; ++f) {
      for (std::size_t t = 0; t < n; ++t) {
        const double* row = h.data().data() + (f * n + t) * dm;
        for (std::size_t o = 0; o < dm; ++o) {
          double sq = 0.0, sk = 0.0, sv = 0.0;
          for (std::size_t d = 0; d < dm; ++d) {
            sq += row[d] * L.wq[d * dm + o];
            sk += row[d] * L.wk[d * dm + o];
            sv += row[d] * L.wv[d * dm + o];
          }
          const std::size_t at = ((f * heads + o / dh) * n + t) * dh + o % dh;
          pkt.q[at] = sq;
          pkt.k[at] = sk;
          pkt.v[at] = sv;
        }
      }
    }
    if (hook) {
      AttentionPacket edited = hook->on_attention(l, pkt);
      if (!edited.q.same_shape(pkt.q) || edited.k.rank() != 4 || !edited.k.same_shape(edited.v) ||
          edited.k.shape()[0] != frames || edited.k.shape()[1] != heads ||
          edited.k.shape()[3] != dh) {
        throw ShapeError("mock backbone: hook returned a malformed packet at layer " +
                         std::to_string(l));
      }
      pkt = std::move(edited);
    }

    const auto sf = static_cast<std::ptrdiff_t>(frames);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t fi = 0; fi < sf; ++fi) {
      const auto f = static_cast<std::size_t>(fi);
      const Tensor o = scaled_dot_attention(cross_frame_restructure(pkt, f));
      for (std::size_t t = 0; t < n; ++t) {
        double* row = h.data().data() + (f * n + t) * dm;
        for (std::size_t d = 0; d < dm; ++d) {
          double s = 0.0;
          for (std::size_t hd = 0; hd < heads; ++hd) {
            for (std::size_t j = 0; j < dh; ++j) {
              s += o[(hd * n + t) * dh + j] * L.wo[(hd * dh + j) * dm + d];
            }
          }
          row[d] += s;
        }
      }
    }
  }

  static const std::vector<double> train = DiffusionSchedule::stable_diffusion().train_alpha_bars();
  const auto ti = static_cast<std::size_t>(std::clamp(timestep, 0, static_cast<int>(train.size()) - 1));
  const double skip = std::sqrt(1.0 - train[ti]);

  Tensor eps(z.shape());
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
          const double* row = h.data().data() + ((f * th + y / p.pool) * tw + x / p.pool) * dm;
          double s = 0.0;
          for (std::size_t d = 0; d < dm; ++d) s += row[d] * w_out_[d * c + ch];
          const std::size_t i = ((f * c + ch) * height + y) * width + x;
          eps[i] = skip * z[i] + p.token_gain * s;
        }
      }
    }
  }
  return {std::move(eps), std::move(h)};
}

}  // namespace vidstyle
