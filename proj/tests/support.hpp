// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

#include "vidstyle/mask.hpp"
#include "vidstyle/rng.hpp"
#include "vidstyle/tensor.hpp"

namespace vidstyle::testing {

inline Tensor random_tensor(Shape shape, std::uint64_t seed, double scale = 1.0,
                            double offset = 0.0) {
  CounterRng rng = CounterRng::stream(seed, "test.tensor");
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = offset + scale * rng.normal();
  return t;
}

inline Tensor uniform_tensor(Shape shape, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  CounterRng rng = CounterRng::stream(seed, "test.uniform");
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = lo + (hi - lo) * rng.uniform();
  return t;
}

inline Mask random_mask(std::size_t h, std::size_t w, std::uint64_t seed, double p = 0.5) {
  CounterRng rng = CounterRng::stream(seed, "test.mask");
  Mask m = Mask::filled(h, w, 0);
  for (auto& v : m.values) v = rng.uniform() < p ? 1 : 0;
  return m;
}

// Two-pass mean / population std over a flat list.
struct Stats {
  double mean = 0.0;
  double std = 0.0;
};

inline Stats stats_of(const std::vector<double>& xs) {
  Stats s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}

// Values of channel c of an N x C x H x W tensor across all frames.
inline std::vector<double> channel_values(const Tensor& t, std::size_t c) {
  const std::size_t n = t.shape()[0], ch = t.shape()[1];
  const std::size_t hw = t.shape()[2] * t.shape()[3];
  std::vector<double> out;
  for (std::size_t f = 0; f < n; ++f) {
    for (std::size_t i = 0; i < hw; ++i) out.push_back(t[(f * ch + c) * hw + i]);
  }
  return out;
}

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("vidstyle-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace vidstyle::testing
