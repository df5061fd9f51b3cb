// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "vidstyle/mock_backends.hpp"

#include <cmath>

#include "vidstyle/error.hpp"
#include "vidstyle/rng.hpp"

namespace vidstyle {

Tensor ConstantNoisePredictor::predict(const Tensor& z, int, const Conditioning&) {
  if (eps_) {
    require_same_shape(*eps_, z, "constant predictor");
    return *eps_;
  }
  return Tensor(z.shape(), value_);
}

Tensor SeededNoisePredictor::predict(const Tensor& z, int timestep, const Conditioning&) {
  CounterRng rng = CounterRng::stream(seed_, "mock.seeded_eps", static_cast<std::uint64_t>(timestep));
  Tensor eps(z.shape());
  for (double& v : eps.data()) v = rng.normal();
  return eps;
}

Tensor to_channels_last(const Tensor& z) {
  if (z.rank() != 4) throw ShapeError("expected frames x C x H x W, got " + shape_str(z.shape()));
  const std::size_t f = z.shape()[0], c = z.shape()[1], h = z.shape()[2], w = z.shape()[3];
  Tensor out({f, h, w, c});
  const auto src = z.data();
  auto dst = out.data();
  for (std::size_t fi = 0; fi < f; ++fi)
    for (std::size_t ci = 0; ci < c; ++ci)
      for (std::size_t p = 0; p < h * w; ++p) dst[(fi * h * w + p) * c + ci] = src[(fi * c + ci) * h * w + p];
  return out;
}

Tensor to_channels_first(const Tensor& p) {
  if (p.rank() != 4) throw ShapeError("expected frames x H x W x C, got " + shape_str(p.shape()));
  const std::size_t f = p.shape()[0], h = p.shape()[1], w = p.shape()[2], c = p.shape()[3];
  Tensor out({f, c, h, w});
  const auto src = p.data();
  auto dst = out.data();
  for (std::size_t fi = 0; fi < f; ++fi)
    for (std::size_t ci = 0; ci < c; ++ci)
      for (std::size_t q = 0; q < h * w; ++q) dst[(fi * c + ci) * h * w + q] = src[(fi * h * w + q) * c + ci];
  return out;
}

Tensor IdentityCodec::decode(const Tensor& latents) { return to_channels_last(latents); }
Tensor IdentityCodec::encode(const Tensor& pixels) { return to_channels_first(pixels); }

OrthogonalCodec::OrthogonalCodec(std::size_t channels, std::uint64_t seed)
    : channels_(channels), q_(channels * channels) {
  if (channels == 0) throw Error("OrthogonalCodec: zero channels");
  // Gram-Schmidt on seeded Gaussian rows; resample on (improbable) rank loss.
  CounterRng rng = CounterRng::stream(seed, "mock.codec");
  for (std::size_t i = 0; i < channels; ++i) {
    for (;;) {
      double* row = &q_[i * channels];
      for (std::size_t j = 0; j < channels; ++j) row[j] = rng.normal();
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < i; ++k) {
          const double* prev = &q_[k * channels];
          double dot = 0.0;
          for (std::size_t j = 0; j < channels; ++j) dot += row[j] * prev[j];
          for (std::size_t j = 0; j < channels; ++j) row[j] -= dot * prev[j];
        }
      }
      double norm = 0.0;
      for (std::size_t j = 0; j < channels; ++j) norm += row[j] * row[j];
      norm = std::sqrt(norm);
      if (norm > 1e-6) {
        for (std::size_t j = 0; j < channels; ++j) row[j] /= norm;
        break;
      }
    }
  }
}

Tensor OrthogonalCodec::decode(const Tensor& latents) {
  if (latents.rank() != 4 || latents.shape()[1] != channels_) {
    throw ShapeError("OrthogonalCodec::decode: expected frames x " + std::to_string(channels_) +
                     " x H x W, got " + shape_str(latents.shape()));
  }
  Tensor p = to_channels_last(latents);
  const std::size_t c = channels_;
  auto d = p.data();
  std::vector<double> tmp(c);
  for (std::size_t base = 0; base < d.size(); base += c) {
    for (std::size_t i = 0; i < c; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < c; ++j) s += q_[i * c + j] * d[base + j];
      tmp[i] = s;
    }
    std::copy(tmp.begin(), tmp.end(), d.begin() + static_cast<std::ptrdiff_t>(base));
  }
  return p;
}

Tensor OrthogonalCodec::encode(const Tensor& pixels) {
  if (pixels.rank() != 4 || pixels.shape()[3] != channels_) {
    throw ShapeError("OrthogonalCodec::encode: expected frames x H x W x " +
                     std::to_string(channels_) + ", got " + shape_str(pixels.shape()));
  }
  Tensor p = pixels;
  const std::size_t c = channels_;
  auto d = p.data();
  std::vector<double> tmp(c);
  for (std::size_t base = 0; base < d.size(); base += c) {
    for (std::size_t i = 0; i < c; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < c; ++j) s += q_[j * c + i] * d[base + j];
      tmp[i] = s;
    }
    std::copy(tmp.begin(), tmp.end(), d.begin() + static_cast<std::ptrdiff_t>(base));
  }
  return to_channels_first(p);
}

}  // namespace vidstyle
