// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

// Serial reference vs OpenMP kernels. Set OMP_NUM_THREADS to vary the team.

#include <benchmark/benchmark.h>

#include <vector>

#include "vidstyle/flow_field.hpp"
#include "vidstyle/kernels.hpp"
#include "vidstyle/rng.hpp"

namespace vk = vidstyle::kernels;
using vidstyle::CounterRng;
using vidstyle::FlowField;
using vidstyle::Tensor;

namespace {

std::vector<double> normals(std::size_t n, std::uint64_t seed) {
  CounterRng rng = CounterRng::stream(seed, "bench");
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

struct KnnData {
  std::vector<double> queries, anchors, norms;
  std::vector<std::uint8_t> labels, out;
  std::size_t dim = 64;

  explicit KnnData(std::size_t grid) {
    const std::size_t q = grid * grid, a = q * 3;
    queries = normals(q * dim, 1);
    anchors = normals(a * dim, 2);
    norms.resize(a);
    vk::row_norms(anchors, dim, norms);
    labels.resize(a);
    for (std::size_t i = 0; i < a; ++i) labels[i] = static_cast<std::uint8_t>(i % 3 == 0);
    out.resize(q);
  }
  vk::AnchorView view() const { return {anchors, norms, labels, dim}; }
};

template <auto Fn>
void BM_knn(benchmark::State& state) {
  KnnData d(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    Fn(d.queries, d.view(), 15, d.out);
    benchmark::DoNotOptimize(d.out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.out.size()));
}

struct WarpData {
  Tensor a, b, out;
  FlowField flow;

  explicit WarpData(std::size_t side)
      : a({side, side, 3}, normals(side * side * 3, 3)),
        b({side, side, 3}, normals(side * side * 3, 4)),
        flow(FlowField::constant(side, side, 1.25, -0.5)) {
    for (std::size_t i = 0; i < flow.pixels(); i += 7) flow.occluded[i] = 1;
  }
};

template <auto Fn>
void BM_warp(benchmark::State& state) {
  WarpData d(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    Fn(d.a, d.b, d.flow, d.out);
    benchmark::DoNotOptimize(d.out.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.flow.pixels()));
}

template <auto Fn>
void BM_hs_sweep(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const std::size_t n = side * side;
  const auto ix = normals(n, 5), iy = normals(n, 6), c = normals(n, 7);
  std::vector<double> u(n, 0.0), v(n, 0.0), u2(n), v2(n);
  for (auto _ : state) {
    Fn(side, side, ix, iy, c, 0.1, u, v, u2, v2);
    u.swap(u2);
    v.swap(v2);
    benchmark::DoNotOptimize(u.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

}  // namespace

BENCHMARK(BM_knn<&vk::serial::knn_label_queries>)->Name("knn/serial")->Arg(16)->Arg(32);
BENCHMARK(BM_knn<&vk::knn_label_queries>)->Name("knn/omp")->Arg(16)->Arg(32);
BENCHMARK(BM_warp<&vk::serial::warp_frame>)->Name("warp/serial")->Arg(256)->Arg(512);
BENCHMARK(BM_warp<&vk::warp_frame>)->Name("warp/omp")->Arg(256)->Arg(512);
BENCHMARK(BM_hs_sweep<&vk::serial::hs_sweep>)->Name("hs_sweep/serial")->Arg(256)->Arg(512);
BENCHMARK(BM_hs_sweep<&vk::hs_sweep>)->Name("hs_sweep/omp")->Arg(256)->Arg(512);

BENCHMARK_MAIN();
