// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "vidstyle/tensor.hpp"

namespace vidstyle {

/// Noise schedule plus the inference ladder.
///
/// Inference steps are indexed s = 0..T. Step 0 is the clean latent
/// (alpha_bar = 1); step s >= 1 maps to training timestep
/// round(s * train_steps / T) - 1 (uniform stride, trailing alignment), so the
/// ladder for T = 50, train_steps = 1000 is 999, 979, ..., 19.
class DiffusionSchedule {
 public:
  /// kind is "linear" or "scaled_linear" (betas linear in sqrt space).
  static DiffusionSchedule build(std::string_view kind, double beta_start, double beta_end,
                                 int train_steps, int inference_steps);
  static DiffusionSchedule stable_diffusion(int inference_steps = 50);

  /// Schedule with an explicit alpha_bar per inference step s = 1..T
  /// (alpha_bar(0) is always 1). Used to pin coefficients in tests.
  static DiffusionSchedule from_alpha_bars(std::vector<double> alpha_bars);

  int steps() const noexcept { return steps_; }
  int train_steps() const noexcept { return static_cast<int>(alpha_bars_.size()); }
  const std::vector<double>& betas() const noexcept { return betas_; }
  /// Cumulative products over training timesteps.
  const std::vector<double>& train_alpha_bars() const noexcept { return alpha_bars_; }

  /// Training timestep of inference step s in 1..T.
  int timestep(int step) const;
  /// alpha_bar at inference step s in 0..T.
  double alpha_bar(int step) const;
  /// timestep(T), ..., timestep(1): strictly decreasing, length T.
  std::vector<int> ladder() const;

 private:
  DiffusionSchedule() = default;
  void check_step(int step) const;

  int steps_ = 0;
  std::vector<double> betas_;
  std::vector<double> alpha_bars_;
  std::vector<int> timesteps_;           // index s-1
  std::vector<double> step_alpha_bars_;  // index s, s = 0..T
};

// Coefficient-level DDIM algebra. All steps are deterministic (eta = 0).

/// (z_t - sqrt(1 - ab_t) * eps) / sqrt(ab_t)
Tensor predicted_z0(const Tensor& z_t, const Tensor& eps, double alpha_bar_t);

/// sqrt(ab_to) * predicted_z0(z, eps, ab_from) + sqrt(1 - ab_to) * eps
Tensor ddim_transfer(const Tensor& z, const Tensor& eps, double alpha_bar_from,
                     double alpha_bar_to);

struct InversionCoefficients {
  double a;  // sqrt(ab_next / ab_t)
  double b;  // sqrt(1 - ab_next) - a * sqrt(1 - ab_t)
};
InversionCoefficients inversion_coefficients(double alpha_bar_t, double alpha_bar_next);

/// a * z_t + b * eps
Tensor ddim_invert(const Tensor& z_t, const Tensor& eps, double alpha_bar_t,
                   double alpha_bar_next);

/// Noise that maps z_t onto a given clean estimate:
/// (z_t - sqrt(ab_t) * zbar0) / sqrt(1 - ab_t).
Tensor refine_noise(const Tensor& z_t, const Tensor& zbar0, double alpha_bar_t);

// Schedule-indexed wrappers, s = inference step.

Tensor predicted_z0(const Tensor& z_t, const Tensor& eps, int step, const DiffusionSchedule& sched);
/// One denoising step s -> s_prev (s_prev < s).
Tensor ddim_denoise_step(const Tensor& z_t, const Tensor& eps, int step, int step_prev,
                         const DiffusionSchedule& sched);
/// One inversion step s -> s_next (s_next > s).
Tensor ddim_invert_step(const Tensor& z_t, const Tensor& eps, int step, int step_next,
                        const DiffusionSchedule& sched);
Tensor refine_noise(const Tensor& z_t, const Tensor& zbar0, int step, const DiffusionSchedule& sched);

/// Opaque conditioning; empty means the null condition used for editing.
struct Conditioning {
  std::optional<Tensor> embedding;
  bool empty() const noexcept { return !embedding.has_value(); }
};

/// epsilon-predictor. Implementations must be deterministic for fixed inputs.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;

  /// Predicted noise, same shape as z (frames x channels x height x width).
  virtual Tensor predict(const Tensor& z, int timestep, const Conditioning& cond) = 0;

  /// Whether predict_with_features() can expose last up-sampling block
  /// features.
  virtual bool has_feature_hook() const { return false; }

  /// Noise plus a frames x h_f x w_f x d feature stack.
  virtual std::pair<Tensor, Tensor> predict_with_features(const Tensor& z, int timestep,
                                                          const Conditioning& cond);
};

/// Maps latents (frames x C x H x W) to pixel videos (frames x H' x W' x C')
/// and back.
class LatentCodec {
 public:
  virtual ~LatentCodec() = default;
  virtual Tensor decode(const Tensor& latents) = 0;
  virtual Tensor encode(const Tensor& pixels) = 0;
};

struct InversionResult {
  Tensor noise;                    // z_T
  std::optional<Tensor> features;  // captured at the feature step
  std::vector<Tensor> trajectory;  // z_0 .. z_T, length T + 1
};

/// DDIM inversion z_0 -> z_T. At step s the noise is predicted from z_s with
/// timestep label timestep(s + 1) (first-order approximation
/// eps(z_{s+1}) ~ eps(z_s)). When feature_step is set, the features of the
/// prediction made on z_{feature_step} are recorded.
InversionResult run_inversion(const Tensor& video, NoisePredictor& predictor,
                              const DiffusionSchedule& sched,
                              std::optional<int> feature_step = std::nullopt,
                              const Conditioning& cond = {});

/// Plain DDIM sampling z_T -> z_0.
Tensor run_denoising(const Tensor& noise, NoisePredictor& predictor, const DiffusionSchedule& sched,
                     const Conditioning& cond = {});

}  // namespace vidstyle
