// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vidstyle/backbone.hpp"
#include "vidstyle/scheduler.hpp"

namespace vidstyle {

/// One request / response exchange with a backend process through a call
/// directory. See docs/backend-protocol.md for the file layout.
class BackendProcess {
 public:
  BackendProcess(std::string command, std::filesystem::path work_dir, bool keep_calls = false);

  /// Fresh, empty call directory `work_dir/call_%06d`.
  std::filesystem::path new_call();
  /// Writes request.json, runs `command <call_dir>`, and checks the exit code.
  void run(const std::filesystem::path& call_dir, const std::string& request_json);
  /// Reads a response tensor; missing files are a BackendError.
  Tensor read(const std::filesystem::path& call_dir, const std::string& name) const;
  /// Deletes the call directory unless calls are kept.
  void finish(const std::filesystem::path& call_dir);

  std::size_t calls() const noexcept { return calls_; }

 private:
  std::string command_;
  std::filesystem::path work_dir_;
  bool keep_calls_;
  std::size_t calls_ = 0;
};

/// Noise predictor (and feature source) served by an external process.
class ExternalPredictor : public NoisePredictor {
 public:
  explicit ExternalPredictor(BackendProcess process) : process_(std::move(process)) {}

  Tensor predict(const Tensor& z, int timestep, const Conditioning& cond) override;
  bool has_feature_hook() const override { return true; }
  std::pair<Tensor, Tensor> predict_with_features(const Tensor& z, int timestep,
                                                  const Conditioning& cond) override;

 protected:
  BackendProcess process_;
};

/// External backbone with attention hooks, in two passes: a capture pass
/// returns the Q/K/V projections of every attention layer, the host hook edits
/// them, and an inject pass recomputes the output with the edited packets.
/// The captured packets of a layer do not see edits injected at earlier
/// layers, so the result equals in-process hooking exactly when at most one
/// layer is edited.
class ExternalBackbone final : public AttentionBackbone {
 public:
  /// Queries the process for its layer layout ("describe").
  explicit ExternalBackbone(BackendProcess process);

  std::size_t attention_layers() const override { return layers_; }
  std::vector<std::size_t> up_block_layers() const override { return up_layers_; }

  Tensor predict_hooked(const Tensor& z, int timestep, const Conditioning& cond,
                        AttentionHook* hook) override;
  bool has_feature_hook() const override { return true; }
  std::pair<Tensor, Tensor> predict_with_features(const Tensor& z, int timestep,
                                                  const Conditioning& cond) override;

  std::size_t calls() const noexcept { return process_.calls(); }

 private:
  BackendProcess process_;
  std::size_t layers_ = 0;
  std::vector<std::size_t> up_layers_;
};

/// Latent codec served by an external process.
class ExternalCodec final : public LatentCodec {
 public:
  explicit ExternalCodec(BackendProcess process) : process_(std::move(process)) {}

  Tensor decode(const Tensor& latents) override;
  Tensor encode(const Tensor& pixels) override;

 private:
  Tensor call(const char* op, const Tensor& input);

  BackendProcess process_;
};

}  // namespace vidstyle
