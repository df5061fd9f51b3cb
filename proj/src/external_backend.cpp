// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "vidstyle/external_backend.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vidstyle/error.hpp"
#include "vidstyle/npy.hpp"

namespace vidstyle {

namespace {

using json = nlohmann::json;

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

json request(const char* op, int timestep) {
  json j;
  j["op"] = op;
  if (timestep >= 0) j["timestep"] = timestep;
  return j;
}

std::string layer_file(const char* prefix, std::size_t layer, char which) {
  return std::string(prefix) + "_" + std::to_string(layer) + "_" + which + ".npy";
}

}  // namespace

BackendProcess::BackendProcess(std::string command, std::filesystem::path work_dir, bool keep_calls)
    : command_(std::move(command)), work_dir_(std::move(work_dir)), keep_calls_(keep_calls) {
  if (command_.empty()) throw BackendError("external backend: empty command");
  if (work_dir_.empty()) throw BackendError("external backend: empty work directory");
  std::filesystem::create_directories(work_dir_);
}

std::filesystem::path BackendProcess::new_call() {
  char name[32];
  std::snprintf(name, sizeof name, "call_%06zu", calls_++);
  const std::filesystem::path dir = work_dir_ / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void BackendProcess::run(const std::filesystem::path& call_dir, const std::string& request_json) {
  {
    std::ofstream out(call_dir / "request.json", std::ios::trunc);
    if (!out) throw BackendError("external backend: cannot write request in " + call_dir.string());
    out << request_json << '\n';
  }
  const std::string cmd = command_ + " " + shell_quote(call_dir.string());
  const int rc = std::system(cmd.c_str());
  if (rc != 0) {
    std::string detail;
    std::ifstream err(call_dir / "error.txt");
    if (err) {
      std::ostringstream ss;
      ss << err.rdbuf();
      detail = ": " + ss.str();
    }
    throw BackendError("external backend '" + command_ + "' failed with status " +
                       std::to_string(rc) + detail);
  }
}

Tensor BackendProcess::read(const std::filesystem::path& call_dir, const std::string& name) const {
  const std::filesystem::path p = call_dir / name;
  if (!std::filesystem::exists(p)) {
    throw BackendError("external backend did not write " + p.string());
  }
  try {
    return read_npy(p);
  } catch (const FormatError& e) {
    throw BackendError(std::string("external backend response: ") + e.what());
  }
}

void BackendProcess::finish(const std::filesystem::path& call_dir) {
  if (!keep_calls_) std::filesystem::remove_all(call_dir);
}

Tensor ExternalPredictor::predict(const Tensor& z, int timestep, const Conditioning& cond) {
  const auto dir = process_.new_call();
  write_npy(z, dir / "input.npy");
  if (!cond.empty()) write_npy(*cond.embedding, dir / "condition.npy");
  process_.run(dir, request("predict", timestep).dump());
  Tensor eps = process_.read(dir, "output.npy");
  process_.finish(dir);
  if (!eps.same_shape(z)) throw BackendError("external predictor returned shape " + shape_str(eps.shape()));
  return eps;
}

std::pair<Tensor, Tensor> ExternalPredictor::predict_with_features(const Tensor& z, int timestep,
                                                                   const Conditioning& cond) {
  const auto dir = process_.new_call();
  write_npy(z, dir / "input.npy");
  if (!cond.empty()) write_npy(*cond.embedding, dir / "condition.npy");
  json req = request("predict", timestep);
  req["features"] = true;
  process_.run(dir, req.dump());
  Tensor eps = process_.read(dir, "output.npy");
  Tensor feats = process_.read(dir, "features.npy");
  process_.finish(dir);
  if (!eps.same_shape(z)) throw BackendError("external predictor returned shape " + shape_str(eps.shape()));
  return {std::move(eps), std::move(feats)};
}

ExternalBackbone::ExternalBackbone(BackendProcess process) : process_(std::move(process)) {
  const auto dir = process_.new_call();
  process_.run(dir, request("describe", -1).dump());
  std::ifstream in(dir / "response.json");
  if (!in) throw BackendError("external backbone did not answer 'describe'");
  try {
    const json j = json::parse(in);
    layers_ = j.at("attention_layers").get<std::size_t>();
    up_layers_ = j.at("up_block_layers").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw BackendError(std::string("external backbone describe response: ") + e.what());
  }
  process_.finish(dir);
}

Tensor ExternalBackbone::predict_hooked(const Tensor& z, int timestep, const Conditioning& cond,
                                        AttentionHook* hook) {
  auto dir = process_.new_call();
  write_npy(z, dir / "input.npy");
  if (!cond.empty()) write_npy(*cond.embedding, dir / "condition.npy");
  json req = request("predict", timestep);
  if (hook) req["capture"] = true;
  process_.run(dir, req.dump());
  Tensor eps = process_.read(dir, "output.npy");
  if (!hook) {
    process_.finish(dir);
    return eps;
  }

  std::vector<std::pair<std::size_t, AttentionPacket>> edits;
  for (std::size_t l = 0; l < layers_; ++l) {
    AttentionPacket pkt{process_.read(dir, layer_file("attn", l, 'q')),
                        process_.read(dir, layer_file("attn", l, 'k')),
                        process_.read(dir, layer_file("attn", l, 'v'))};
    AttentionPacket out = hook->on_attention(l, pkt);
    if (!bitwise_equal(out.q, pkt.q) || !bitwise_equal(out.k, pkt.k) || !bitwise_equal(out.v, pkt.v)) {
      edits.emplace_back(l, std::move(out));
    }
  }
  process_.finish(dir);
  if (edits.empty()) return eps;

  dir = process_.new_call();
  write_npy(z, dir / "input.npy");
  if (!cond.empty()) write_npy(*cond.embedding, dir / "condition.npy");
  json inject = request("predict", timestep);
  inject["inject"] = json::array();
  for (const auto& [l, pkt] : edits) {
    inject["inject"].push_back(l);
    write_npy(pkt.q, dir / layer_file("inject", l, 'q'));
    write_npy(pkt.k, dir / layer_file("inject", l, 'k'));
    write_npy(pkt.v, dir / layer_file("inject", l, 'v'));
  }
  process_.run(dir, inject.dump());
  eps = process_.read(dir, "output.npy");
  process_.finish(dir);
  if (!eps.same_shape(z)) throw BackendError("external backbone returned shape " + shape_str(eps.shape()));
  return eps;
}

std::pair<Tensor, Tensor> ExternalBackbone::predict_with_features(const Tensor& z, int timestep,
                                                                  const Conditioning& cond) {
  const auto dir = process_.new_call();
  write_npy(z, dir / "input.npy");
  if (!cond.empty()) write_npy(*cond.embedding, dir / "condition.npy");
  json req = request("predict", timestep);
  req["features"] = true;
  process_.run(dir, req.dump());
  Tensor eps = process_.read(dir, "output.npy");
  Tensor feats = process_.read(dir, "features.npy");
  process_.finish(dir);
  return {std::move(eps), std::move(feats)};
}

Tensor ExternalCodec::call(const char* op, const Tensor& input) {
  const auto dir = process_.new_call();
  write_npy(input, dir / "input.npy");
  process_.run(dir, request(op, -1).dump());
  Tensor out = process_.read(dir, "output.npy");
  process_.finish(dir);
  return out;
}

Tensor ExternalCodec::decode(const Tensor& latents) { return call("decode", latents); }
Tensor ExternalCodec::encode(const Tensor& pixels) { return call("encode", pixels); }

}  // namespace vidstyle
