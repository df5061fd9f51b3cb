// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "vidstyle/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vidstyle/error.hpp"

namespace vidstyle {

using nlohmann::json;

int RunConfig::step_index(double fraction) const {
  return static_cast<int>(std::floor(fraction * T + 0.5));
}

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& prefix = "") {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config field '" + prefix + key + "' has the wrong type");
  }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& prefix) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw ConfigError("unknown config field '" + prefix + it.key() + "'");
  }
}

void check(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("config: " + what + " violated");
}

void check_window(double lo, double hi, const char* lo_name, const char* hi_name) {
  check(lo >= 0.0, std::string("0≤") + lo_name);
  check(lo < hi, std::string(lo_name) + "<" + hi_name);
  check(hi <= 1.0, std::string(hi_name) + "≤T");
}

}  // namespace

void validate(const RunConfig& c) {
  check(c.T >= 1, "T≥1");
  check_window(c.tau0, c.tau1, "τ0", "τ1");
  check_window(c.tau2, c.tau3, "τ2", "τ3");
  check_window(c.tau4, c.tau5, "τ4", "τ5");
  check(c.t0 >= 0.0 && c.t0 <= 1.0, "0≤t0≤T");
  check(c.r > 0.0 && c.r <= 1.0, "0<r≤1");
  check(c.k >= 1, "k≥1");
  check(c.m >= 0, "m≥0");
  check(c.n >= 0, "n≥0");
  check(c.gamma >= 0.0 && c.gamma <= 1.0, "0≤γ≤1");
  check(std::isfinite(c.beta_tau2) && std::isfinite(c.beta_tau3), "finite β");
  check(c.schedule.kind == "linear" || c.schedule.kind == "scaled_linear",
        "schedule.kind ∈ {linear, scaled_linear}");
  check(c.schedule.beta_start >= 0.0 && c.schedule.beta_start <= c.schedule.beta_end &&
            c.schedule.beta_end < 1.0,
        "0≤β_start≤β_end<1");
  check(c.schedule.train_steps >= 1, "train_steps≥1");
  check(c.T <= c.schedule.train_steps, "T≤train_steps");
  check(c.hs_lambda > 0.0, "hs_lambda>0");
  check(c.hs_iterations >= 0, "hs_iterations≥0");
  for (int l : c.hooked_layers) check(l >= 0, "hooked_layers≥0");
}

RunConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  reject_unknown(j,
                 {"T", "tau0", "tau1", "tau2", "tau3", "tau4", "tau5", "t0", "gamma", "beta_tau2",
                  "beta_tau3", "r", "k", "m", "n", "seed", "schedule", "adain_per_frame",
                  "latent_shift", "attention_shift", "smoothing", "replay_from_cache",
                  "reflow_each_step", "hooked_layers", "hs_lambda", "hs_iterations", "backend"},
                 "");
  RunConfig c;
  read_field(j, "T", c.T);
  read_field(j, "tau0", c.tau0);
  read_field(j, "tau1", c.tau1);
  read_field(j, "tau2", c.tau2);
  read_field(j, "tau3", c.tau3);
  read_field(j, "tau4", c.tau4);
  read_field(j, "tau5", c.tau5);
  read_field(j, "t0", c.t0);
  read_field(j, "gamma", c.gamma);
  read_field(j, "beta_tau2", c.beta_tau2);
  read_field(j, "beta_tau3", c.beta_tau3);
  read_field(j, "r", c.r);
  read_field(j, "k", c.k);
  read_field(j, "m", c.m);
  read_field(j, "n", c.n);
  read_field(j, "seed", c.seed);
  read_field(j, "adain_per_frame", c.adain_per_frame);
  read_field(j, "latent_shift", c.latent_shift);
  read_field(j, "attention_shift", c.attention_shift);
  read_field(j, "smoothing", c.smoothing);
  read_field(j, "replay_from_cache", c.replay_from_cache);
  read_field(j, "reflow_each_step", c.reflow_each_step);
  read_field(j, "hooked_layers", c.hooked_layers);
  read_field(j, "hs_lambda", c.hs_lambda);
  read_field(j, "hs_iterations", c.hs_iterations);

  if (auto it = j.find("schedule"); it != j.end()) {
    if (!it->is_object()) throw ConfigError("config field 'schedule' must be an object");
    reject_unknown(*it, {"kind", "beta_start", "beta_end", "train_steps"}, "schedule.");
    read_field(*it, "kind", c.schedule.kind, "schedule.");
    read_field(*it, "beta_start", c.schedule.beta_start, "schedule.");
    read_field(*it, "beta_end", c.schedule.beta_end, "schedule.");
    read_field(*it, "train_steps", c.schedule.train_steps, "schedule.");
  }
  if (auto it = j.find("backend"); it != j.end()) {
    if (!it->is_object()) throw ConfigError("config field 'backend' must be an object");
    reject_unknown(*it, {"predictor", "predictor_cmd", "codec", "codec_cmd", "flows_dir", "work_dir"},
                   "backend.");
    read_field(*it, "predictor", c.backend.predictor, "backend.");
    read_field(*it, "predictor_cmd", c.backend.predictor_cmd, "backend.");
    read_field(*it, "codec", c.backend.codec, "backend.");
    read_field(*it, "codec_cmd", c.backend.codec_cmd, "backend.");
    read_field(*it, "flows_dir", c.backend.flows_dir, "backend.");
    read_field(*it, "work_dir", c.backend.work_dir, "backend.");
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& c) {
  json j = {
      {"T", c.T},
      {"tau0", c.tau0},
      {"tau1", c.tau1},
      {"tau2", c.tau2},
      {"tau3", c.tau3},
      {"tau4", c.tau4},
      {"tau5", c.tau5},
      {"t0", c.t0},
      {"gamma", c.gamma},
      {"beta_tau2", c.beta_tau2},
      {"beta_tau3", c.beta_tau3},
      {"r", c.r},
      {"k", c.k},
      {"m", c.m},
      {"n", c.n},
      {"seed", c.seed},
      {"adain_per_frame", c.adain_per_frame},
      {"latent_shift", c.latent_shift},
      {"attention_shift", c.attention_shift},
      {"smoothing", c.smoothing},
      {"replay_from_cache", c.replay_from_cache},
      {"reflow_each_step", c.reflow_each_step},
      {"hooked_layers", c.hooked_layers},
      {"hs_lambda", c.hs_lambda},
      {"hs_iterations", c.hs_iterations},
      {"schedule",
       {{"kind", c.schedule.kind},
        {"beta_start", c.schedule.beta_start},
        {"beta_end", c.schedule.beta_end},
        {"train_steps", c.schedule.train_steps}}},
      {"backend",
       {{"predictor", c.backend.predictor},
        {"predictor_cmd", c.backend.predictor_cmd},
        {"codec", c.backend.codec},
        {"codec_cmd", c.backend.codec_cmd},
        {"flows_dir", c.backend.flows_dir},
        {"work_dir", c.backend.work_dir}}},
  };
  return j.dump(2);
}

}  // namespace vidstyle
