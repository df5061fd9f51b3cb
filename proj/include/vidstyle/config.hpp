// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace vidstyle {

struct ScheduleParams {
  std::string kind = "scaled_linear";  // or "linear"
  double beta_start = 0.00085;
  double beta_end = 0.012;
  int train_steps = 1000;

  bool operator==(const ScheduleParams&) const = default;
};

/// Which noise predictor / latent codec to use, and where external
/// processes and precomputed flows live.
struct BackendParams {
  std::string predictor = "mock";  // mock | constant | random | external
  std::string predictor_cmd;       // for "external"
  std::string codec = "orthogonal";  // orthogonal | identity | external
  std::string codec_cmd;
  std::string flows_dir;  // precomputed .flo files; empty = Horn-Schunck
  std::string work_dir;   // scratch space for the external protocol

  bool operator==(const BackendParams&) const = default;
};

/// Run configuration. Interval endpoints (tau*) and the feature tap t0 are
/// stored as fractions of T and resolved to step indices with step_index().
struct RunConfig {
  int T = 50;
  double tau0 = 0.1;  // latent-shift window [tau0, tau1]
  double tau1 = 0.2;
  double tau2 = 0.4;  // attention-shift window [tau2, tau3]
  double tau3 = 1.0;
  double tau4 = 0.5;  // smoothing window [tau4, tau5]
  double tau5 = 0.6;
  double t0 = 0.4;    // inversion step whose features drive mask propagation
  double gamma = 0.35;
  double beta_tau2 = 0.1;
  double beta_tau3 = 0.9;
  double r = 0.3;  // anchor down-sampling rate
  int k = 15;      // kNN neighbours
  int m = 2;       // smoothing half-window
  int n = 9;       // previous anchor frames
  std::uint64_t seed = 0;

  ScheduleParams schedule;
  bool adain_per_frame = false;
  bool latent_shift = true;
  bool attention_shift = true;
  bool smoothing = true;
  bool replay_from_cache = false;
  bool reflow_each_step = false;
  std::vector<int> hooked_layers;  // empty = backbone's up-sampling half
  double hs_lambda = 0.1;
  int hs_iterations = 200;
  BackendParams backend;

  /// round_half_up(fraction * T)
  int step_index(double fraction) const;

  bool operator==(const RunConfig&) const = default;
};

/// Throws ConfigError naming the first violated field.
void validate(const RunConfig& cfg);

/// Missing fields take the defaults above; unknown fields are rejected.
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);
/// Every field, so that parse_config(dump_config(c)) == c.
std::string dump_config(const RunConfig& cfg);

}  // namespace vidstyle
