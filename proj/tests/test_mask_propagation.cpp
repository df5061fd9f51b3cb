// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"
#include "vidstyle/error.hpp"
#include "vidstyle/kernels.hpp"
#include "vidstyle/mask_propagation.hpp"

using namespace vidstyle;
using namespace vidstyle::testing;

namespace {

AnchorSet make_anchors(std::size_t dim, const std::vector<std::vector<double>>& rows,
                       const std::vector<std::uint8_t>& labels) {
  AnchorSet a;
  a.dim = dim;
  for (const auto& r : rows) a.features.insert(a.features.end(), r.begin(), r.end());
  a.labels = labels;
  return a;
}

Mask column_band(std::size_t h, std::size_t w, std::size_t x0, std::size_t x1) {
  Mask m = Mask::filled(h, w, 0);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = x0; x < x1; ++x) m.values[y * w + x] = 1;
  return m;
}

}  // namespace

TEST_CASE("stratified sampling budget") {
  CounterRng rng = CounterRng::stream(1, "t");
  const Mask quarter = column_band(64, 64, 0, 16);
  const auto idx = stratified_sample(quarter, 0.3, rng);
  REQUIRE(idx.size() == 1229);
  std::size_t fg = 0;
  for (std::size_t i : idx) fg += quarter.values[i];
  CHECK(fg == 307);
  CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == idx.size());
  // foreground block ascending, then background block ascending
  CHECK(std::is_sorted(idx.begin(), idx.begin() + 307));
  CHECK(std::is_sorted(idx.begin() + 307, idx.end()));

  const auto all = stratified_sample(quarter, 1.0, rng);
  CHECK(all.size() == 64 * 64);

  const Mask bg = Mask::filled(8, 8, 0);
  const auto b = stratified_sample(bg, 0.5, rng);
  CHECK(b.size() == 32);
  for (std::size_t i : b) CHECK(bg.values[i] == 0);

  Mask dot = Mask::filled(10, 10, 0);
  dot.values[55] = 1;
  const auto d = stratified_sample(dot, 0.1, rng);
  CHECK(d.size() == 10);
  CHECK(d.front() == 55);

  CounterRng r1 = CounterRng::stream(9, "t"), r2 = CounterRng::stream(9, "t");
  CHECK(stratified_sample(quarter, 0.3, r1) == stratified_sample(quarter, 0.3, r2));
  CHECK_THROWS_AS(stratified_sample(quarter, 0.0, rng), Error);
  CHECK_THROWS_AS(stratified_sample(Mask{}, 0.5, rng), Error);
}

TEST_CASE("knn label votes") {
  const AnchorSet one = make_anchors(2, {{1, 0}, {0, 1}}, {1, 0});
  const std::vector<double> q{1, 0};
  CHECK(knn_label(q, one, 1) == 1);
  CHECK(knn_label(std::vector<double>{0, 1}, one, 1) == 0);

  // 10 foreground anchors near the query, 5 background ones a bit further
  std::vector<std::vector<double>> rows;
  std::vector<std::uint8_t> labels;
  for (int i = 0; i < 10; ++i) {
    rows.push_back({1.0, 0.01 * i});
    labels.push_back(1);
  }
  for (int i = 0; i < 5; ++i) {
    rows.push_back({1.0, 0.2 + 0.01 * i});
    labels.push_back(0);
  }
  for (int i = 0; i < 20; ++i) {
    rows.push_back({-1.0, 0.5});
    labels.push_back(0);
  }
  const AnchorSet many = make_anchors(2, rows, labels);
  CHECK(knn_label(q, many, 15) == 1);
  // k larger than the anchor count is clamped: 10 fg of 35 loses
  CHECK(knn_label(q, many, 100) == 0);

  const AnchorSet tie = make_anchors(2, {{1, 0.0}, {1, 0.01}, {1, 0.02}, {1, 0.03}}, {1, 0, 1, 0});
  CHECK(knn_label(q, tie, 4) == 0);
  CHECK(knn_label(q, tie, 3) == 1);

  // positive rescaling of anchors does not change the vote
  AnchorSet scaled_set = many;
  CounterRng rng = CounterRng::stream(3, "scale");
  for (std::size_t a = 0; a < scaled_set.size(); ++a) {
    const double s = 0.1 + 10.0 * rng.uniform();
    for (std::size_t j = 0; j < 2; ++j) scaled_set.features[a * 2 + j] *= s;
  }
  for (std::size_t k : {1u, 3u, 7u, 15u}) {
    CHECK(knn_label(q, scaled_set, k) == knn_label(q, many, k));
  }
  CHECK_THROWS_AS(knn_label(q, AnchorSet{}, 1), Error);
  CHECK_THROWS_AS(knn_label(std::vector<double>{1, 0, 0}, one, 1), ShapeError);
}

TEST_CASE("anchor buffer keeps the first frame and at most n previous frames") {
  auto set = [](double v) { return make_anchors(1, {{v}}, {1}); };
  AnchorBuffer buf(2);
  buf.pin_first(set(0));
  for (int i = 1; i <= 4; ++i) buf.push(set(i));
  CHECK(buf.previous_frames() == 2);
  const AnchorSet all = buf.gather();
  CHECK(all.features == std::vector<double>{3, 4, 0});

  AnchorBuffer none(0);
  none.pin_first(set(0));
  none.push(set(1));
  CHECK(none.gather().features == std::vector<double>{0});
}

TEST_CASE("propagation on a static scene reproduces the first mask") {
  const Tensor base = random_tensor({1, 8, 8, 6}, 21);
  Tensor feats({5, 8, 8, 6});
  for (std::size_t f = 0; f < 5; ++f) feats.set_slice0(f, base);
  const Mask m = random_mask(8, 8, 22, 0.4);
  for (int n : {0, 9}) {
    const MaskSequence out = propagate(feats, m, {1.0, 1, n, 3});
    for (const Mask& mi : out) CHECK(mi == m);
  }
}

TEST_CASE("propagation matches the brute-force reference at full rate") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const Tensor feats = random_tensor({4, 6, 7, 5}, seed);
    const Mask first = random_mask(6, 7, seed + 50, 0.35);
    for (int k : {1, 4, 15}) {
      const PropagationParams p{1.0, k, 3, seed};
      const MaskSequence want = brute_force_propagate(feats, first, static_cast<std::size_t>(k));
      CHECK(propagate(feats, first, p) == want);
      CHECK(propagate_serial(feats, first, p) == want);
    }
  }
}

TEST_CASE("propagation follows a circular translation") {
  const TranslationScene scene = translation_scene(8, 32, 32, 12, 5, 1, 0.0, 4);
  const MaskSequence out = propagate(scene.features, scene.truth[0], {1.0, 15, 9, 5});
  CHECK(out == scene.truth);
  const MaskScores s = iou_dice(propagate(scene.features, scene.truth[0], {0.3, 15, 9, 5}), scene.truth);
  CHECK(s.iou >= 0.9);
}

TEST_CASE("more anchor frames help on a drifting sequence") {
  double iou0 = 0.0, iou9 = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TranslationScene scene = translation_scene(14, 16, 16, 6, seed, 1, 0.25);
    iou0 += iou_dice(propagate(scene.features, scene.truth[0], {0.3, 15, 0, seed}), scene.truth).iou;
    iou9 += iou_dice(propagate(scene.features, scene.truth[0], {0.3, 15, 9, seed}), scene.truth).iou;
  }
  MESSAGE("n=0 IoU " << iou0 / 5 << ", n=9 IoU " << iou9 / 5);
  CHECK(iou9 >= iou0);
}

TEST_CASE("propagation is deterministic across thread counts") {
  const TranslationScene scene = translation_scene(6, 16, 16, 5, 8, 1, 0.1);
  const PropagationParams p{0.3, 15, 9, 4};
  const int threads = kernels::max_threads();
  const MaskSequence ref = propagate_serial(scene.features, scene.truth[0], p);
  for (int t : {1, 2, 4}) {
    kernels::set_threads(t);
    CHECK(propagate(scene.features, scene.truth[0], p) == ref);
  }
  kernels::set_threads(threads);
  const MaskSequence other = propagate(scene.features, scene.truth[0], {0.3, 15, 9, 5});
  CHECK(other.size() == ref.size());
}

TEST_CASE("propagation argument errors") {
  const Tensor feats({2, 4, 4, 3}, 1.0);
  const Mask m = Mask::filled(4, 4, 1);
  CHECK_THROWS_AS(propagate(feats, Mask::filled(3, 4, 1), {}), ShapeError);
  CHECK_THROWS_AS(propagate(Tensor({4, 4, 3}, 1.0), m, {}), ShapeError);
  CHECK_THROWS_AS(propagate(feats, m, {0.0, 15, 9, 0}), Error);
  CHECK_THROWS_AS(propagate(feats, m, {0.3, 0, 9, 0}), Error);
  CHECK_THROWS_AS(propagate(feats, m, {0.3, 15, -1, 0}), Error);
}

TEST_CASE("nearest-neighbour mask upsampling") {
  const Mask ones = Mask::filled(3, 3, 1);
  const Mask up = resize_nearest(ones, 7, 5);
  CHECK(up.count() == 35);
  Mask checker = Mask::filled(2, 2, 0);
  checker.values = {1, 0, 0, 1};
  const Mask c4 = resize_nearest(checker, 4, 4);
  CHECK(c4.values == std::vector<std::uint8_t>{1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 1, 1, 0, 0, 1, 1});
  const Mask r = random_mask(5, 6, 2);
  CHECK(resize_nearest(r, 5, 6) == r);
  CHECK(upsample_masks({r, r}, 10, 12).size() == 2);
}

TEST_CASE("IoU and Dice") {
  const Mask a = column_band(4, 4, 0, 2);
  CHECK(iou_dice({a}, {a}).iou == 1.0);
  CHECK(iou_dice({a}, {a}).dice == 1.0);
  const Mask b = column_band(4, 4, 2, 4);
  CHECK(iou_dice({a}, {b}).iou == 0.0);
  CHECK(iou_dice({a}, {b}).dice == 0.0);
  const Mask half = column_band(4, 4, 1, 3);
  const MaskScores s = iou_dice({a}, {half});
  CHECK(s.iou == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(s.dice == 0.5);
  const Mask e = Mask::filled(4, 4, 0);
  CHECK(iou_dice({e}, {e}).iou == 1.0);
  const MaskScores avg = iou_dice({a, a}, {a, b});
  CHECK(avg.iou == 0.5);
  CHECK_THROWS_AS(iou_dice({a}, {a, a}), ShapeError);
  CHECK_THROWS_AS(iou_dice({a}, {Mask::filled(3, 3, 0)}), ShapeError);
}
