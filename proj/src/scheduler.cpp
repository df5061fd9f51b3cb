// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "vidstyle/scheduler.hpp"

#include <cmath>
#include <string>

#include "vidstyle/error.hpp"

namespace vidstyle {

DiffusionSchedule DiffusionSchedule::build(std::string_view kind, double beta_start,
                                           double beta_end, int train_steps,
                                           int inference_steps) {
  if (train_steps < 1) throw Error("schedule: train_steps must be >= 1");
  if (inference_steps < 1) throw Error("schedule: T must be >= 1");
  if (inference_steps > train_steps) {
    throw Error("schedule: T (" + std::to_string(inference_steps) + ") exceeds train_steps (" +
                std::to_string(train_steps) + ")");
  }
  if (!(beta_start >= 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw Error("schedule: need 0 <= beta_start <= beta_end < 1");
  }

  DiffusionSchedule s;
  s.steps_ = inference_steps;
  s.betas_.resize(static_cast<std::size_t>(train_steps));
  const double denom = train_steps > 1 ? static_cast<double>(train_steps - 1) : 1.0;
  for (int i = 0; i < train_steps; ++i) {
    const double f = static_cast<double>(i) / denom;
    double beta;
    if (kind == "linear") {
      beta = beta_start + f * (beta_end - beta_start);
    } else if (kind == "scaled_linear") {
      const double root = std::sqrt(beta_start) + f * (std::sqrt(beta_end) - std::sqrt(beta_start));
      beta = root * root;
    } else {
      throw Error("schedule: unknown kind '" + std::string(kind) + "'");
    }
    s.betas_[static_cast<std::size_t>(i)] = beta;
  }
  s.alpha_bars_.resize(s.betas_.size());
  double prod = 1.0;
  for (std::size_t i = 0; i < s.betas_.size(); ++i) {
    prod *= 1.0 - s.betas_[i];
    s.alpha_bars_[i] = prod;
  }

  s.timesteps_.resize(static_cast<std::size_t>(inference_steps));
  s.step_alpha_bars_.resize(static_cast<std::size_t>(inference_steps) + 1);
  s.step_alpha_bars_[0] = 1.0;
  const double stride = static_cast<double>(train_steps) / inference_steps;
  for (int step = 1; step <= inference_steps; ++step) {
    const int t = static_cast<int>(std::floor(step * stride + 0.5)) - 1;
    s.timesteps_[static_cast<std::size_t>(step - 1)] = t;
    s.step_alpha_bars_[static_cast<std::size_t>(step)] = s.alpha_bars_[static_cast<std::size_t>(t)];
  }
  return s;
}

DiffusionSchedule DiffusionSchedule::stable_diffusion(int inference_steps) {
  return build("scaled_linear", 0.00085, 0.012, 1000, inference_steps);
}

DiffusionSchedule DiffusionSchedule::from_alpha_bars(std::vector<double> alpha_bars) {
  if (alpha_bars.empty()) throw Error("schedule: empty alpha_bar table");
  for (double ab : alpha_bars) {
    if (!(ab > 0.0 && ab <= 1.0)) throw Error("schedule: alpha_bar outside (0, 1]");
  }
  DiffusionSchedule s;
  s.steps_ = static_cast<int>(alpha_bars.size());
  s.alpha_bars_ = alpha_bars;
  s.betas_.resize(alpha_bars.size());
  double prev = 1.0;
  for (std::size_t i = 0; i < alpha_bars.size(); ++i) {
    s.betas_[i] = 1.0 - alpha_bars[i] / prev;
    prev = alpha_bars[i];
  }
  s.timesteps_.resize(alpha_bars.size());
  for (std::size_t i = 0; i < alpha_bars.size(); ++i) s.timesteps_[i] = static_cast<int>(i);
  s.step_alpha_bars_.assign(1, 1.0);
  s.step_alpha_bars_.insert(s.step_alpha_bars_.end(), alpha_bars.begin(), alpha_bars.end());
  return s;
}

void DiffusionSchedule::check_step(int step) const {
  if (step < 0 || step > steps_) {
    throw Error("schedule: step " + std::to_string(step) + " outside [0, " +
                std::to_string(steps_) + "]");
  }
}

int DiffusionSchedule::timestep(int step) const {
  check_step(step);
  if (step == 0) throw Error("schedule: step 0 is the clean latent and has no timestep");
  return timesteps_[static_cast<std::size_t>(step - 1)];
}

double DiffusionSchedule::alpha_bar(int step) const {
  check_step(step);
  return step_alpha_bars_[static_cast<std::size_t>(step)];
}

std::vector<int> DiffusionSchedule::ladder() const {
  return std::vector<int>(timesteps_.rbegin(), timesteps_.rend());
}

Tensor predicted_z0(const Tensor& z_t, const Tensor& eps, double alpha_bar_t) {
  if (!(alpha_bar_t > 0.0)) throw Error("predicted_z0: alpha_bar must be > 0");
  const double inv = 1.0 / std::sqrt(alpha_bar_t);
  return axpby(inv, z_t, -std::sqrt(1.0 - alpha_bar_t) * inv, eps);
}

Tensor ddim_transfer(const Tensor& z, const Tensor& eps, double alpha_bar_from,
                     double alpha_bar_to) {
  const Tensor z0 = predicted_z0(z, eps, alpha_bar_from);
  return axpby(std::sqrt(alpha_bar_to), z0, std::sqrt(1.0 - alpha_bar_to), eps);
}

InversionCoefficients inversion_coefficients(double alpha_bar_t, double alpha_bar_next) {
  if (!(alpha_bar_t > 0.0) || !(alpha_bar_next > 0.0)) {
    throw Error("inversion: alpha_bar must be > 0");
  }
  InversionCoefficients c;
  c.a = std::sqrt(alpha_bar_next / alpha_bar_t);
  c.b = std::sqrt(1.0 - alpha_bar_next) - c.a * std::sqrt(1.0 - alpha_bar_t);
  return c;
}

Tensor ddim_invert(const Tensor& z_t, const Tensor& eps, double alpha_bar_t,
                   double alpha_bar_next) {
  const auto c = inversion_coefficients(alpha_bar_t, alpha_bar_next);
  return axpby(c.a, z_t, c.b, eps);
}

Tensor refine_noise(const Tensor& z_t, const Tensor& zbar0, double alpha_bar_t) {
  if (!(alpha_bar_t < 1.0)) throw Error("refine_noise: no noise direction at ᾱ=1");
  const double inv = 1.0 / std::sqrt(1.0 - alpha_bar_t);
  return axpby(inv, z_t, -std::sqrt(alpha_bar_t) * inv, zbar0);
}

Tensor predicted_z0(const Tensor& z_t, const Tensor& eps, int step, const DiffusionSchedule& sched) {
  return predicted_z0(z_t, eps, sched.alpha_bar(step));
}

Tensor ddim_denoise_step(const Tensor& z_t, const Tensor& eps, int step, int step_prev,
                         const DiffusionSchedule& sched) {
  if (step_prev >= step) {
    throw Error("ddim_denoise_step: target step " + std::to_string(step_prev) +
                " is not earlier than " + std::to_string(step));
  }
  return ddim_transfer(z_t, eps, sched.alpha_bar(step), sched.alpha_bar(step_prev));
}

Tensor ddim_invert_step(const Tensor& z_t, const Tensor& eps, int step, int step_next,
                        const DiffusionSchedule& sched) {
  if (step_next <= step) {
    throw Error("ddim_invert_step: target step " + std::to_string(step_next) +
                " is not later than " + std::to_string(step));
  }
  return ddim_invert(z_t, eps, sched.alpha_bar(step), sched.alpha_bar(step_next));
}

Tensor refine_noise(const Tensor& z_t, const Tensor& zbar0, int step, const DiffusionSchedule& sched) {
  return refine_noise(z_t, zbar0, sched.alpha_bar(step));
}

std::pair<Tensor, Tensor> NoisePredictor::predict_with_features(const Tensor&, int,
                                                                const Conditioning&) {
  throw Error("noise predictor has no feature hook");
}

InversionResult run_inversion(const Tensor& video, NoisePredictor& predictor,
                              const DiffusionSchedule& sched, std::optional<int> feature_step,
                              const Conditioning& cond) {
  if (video.rank() != 4) throw ShapeError("run_inversion expects frames x C x H x W");
  const int steps = sched.steps();
  if (feature_step) {
    if (*feature_step < 0 || *feature_step > steps) {
      throw Error("run_inversion: feature step outside [0, T]");
    }
    if (!predictor.has_feature_hook()) {
      throw Error("run_inversion: features requested but the predictor has no feature hook");
    }
  }

  InversionResult result;
  result.trajectory.reserve(static_cast<std::size_t>(steps) + 1);
  result.trajectory.push_back(video);
  for (int s = 0; s < steps; ++s) {
    const Tensor& z = result.trajectory.back();
    Tensor eps;
    if (feature_step && *feature_step == s) {
      auto [e, f] = predictor.predict_with_features(z, sched.timestep(s + 1), cond);
      eps = std::move(e);
      result.features = std::move(f);
    } else {
      eps = predictor.predict(z, sched.timestep(s + 1), cond);
    }
    require_same_shape(eps, z, "noise predictor output");
    result.trajectory.push_back(ddim_invert_step(z, eps, s, s + 1, sched));
  }
  if (feature_step && *feature_step == steps) {
    result.features =
        predictor.predict_with_features(result.trajectory.back(), sched.timestep(steps), cond).second;
  }
  result.noise = result.trajectory.back();
  return result;
}

Tensor run_denoising(const Tensor& noise, NoisePredictor& predictor, const DiffusionSchedule& sched,
                     const Conditioning& cond) {
  Tensor z = noise;
  for (int s = sched.steps(); s >= 1; --s) {
    const Tensor eps = predictor.predict(z, sched.timestep(s), cond);
    require_same_shape(eps, z, "noise predictor output");
    z = ddim_denoise_step(z, eps, s, s - 1, sched);
  }
  return z;
}

}  // namespace vidstyle
