// Copyright 2026 The rnx Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "rnx/error.hpp"
#include "rnx/losses.hpp"
#include "rnx/metrics.hpp"

using namespace rnx;
using rnx::testing::Rng;

namespace {

const double kLn2Quarter = 0.25 * std::log(2.0);

Tensor scalar_map(float v) { return Tensor({1, 1, 1}, v); }

Detection det(double x, double score, std::size_t cls = 0) { return {Box3D(x, 0, 0, 2, 2, 2, 0), cls, score}; }
LabeledBox gt(double x, std::size_t cls = 0) { return {Box3D(x, 0, 0, 2, 2, 2, 0), cls}; }

}  // namespace

TEST_CASE("focal loss hand values") {
  CHECK(focal_loss(scalar_map(0.5f), scalar_map(1.0f)) == doctest::Approx(kLn2Quarter).epsilon(1e-9));
  CHECK(focal_loss(scalar_map(0.5f), scalar_map(0.0f)) == doctest::Approx(kLn2Quarter).epsilon(1e-9));
  CHECK(std::abs(focal_loss(scalar_map(0.5f), scalar_map(1.0f)) - 0.1733) <= 1e-4);

  Tensor t({1, 2, 3}), p({1, 2, 3});
  t[2] = 1.0f;
  p[2] = 1.0f;
  CHECK(focal_loss(p, t) <= 1e-4);
  CHECK(focal_loss(p, t) >= 0.0);
  CHECK_THROWS_AS(focal_loss(Tensor({1, 2, 2}), t), ShapeError);
}

TEST_CASE("L1 regression loss") {
  Tensor a({8, 2, 2}), b({8, 2, 2});
  std::vector<std::uint8_t> mask(4, 0);
  CHECK(l1_regression_loss(a, b, mask) == 0.0);
  for (std::size_t c = 0; c < 8; ++c) b.at(c, 1, 0) = 0.5f;
  mask[2] = 1;
  CHECK(l1_regression_loss(a, b, mask) == doctest::Approx(0.5));
  CHECK(l1_regression_loss(b, b, mask) == 0.0);
  CHECK_THROWS_AS(l1_regression_loss(a, b, std::vector<std::uint8_t>(3)), ShapeError);
}

TEST_CASE("IoU consistency loss") {
  const Box3D g(0, 0, 0, 2, 1, 1, 0), p(2.0 / 3.0, 0, 0, 2, 1, 1, 0);
  CHECK(iou3d(p, g) == doctest::Approx(0.5).epsilon(1e-12));
  const double pred[] = {0.8};
  const Box3D ps[] = {p}, gs[] = {g};
  CHECK(std::abs(iou_consistency_loss(pred, ps, gs) - 0.3) <= 1e-6);
  const double exact[] = {iou3d(p, g)};
  CHECK(iou_consistency_loss(exact, ps, gs) == 0.0);
  CHECK(iou_consistency_loss({}, {}, {}) == 0.0);

  const double two[] = {0.8, 0.8};
  const Box3D p2[] = {p, p}, g2[] = {g, g};
  CHECK(iou_consistency_loss(two, p2, g2) == doctest::Approx(0.6));
  CHECK(iou_consistency_loss(two, p2, g2, true) == doctest::Approx(0.3));
}

TEST_CASE("distance IoU loss") {
  const Box3D a(0, 0, 0, 1, 1, 1, 0), b(1, 0, 0, 1, 1, 1, 0);
  const Box3D same[] = {a};
  CHECK(diou_loss(same, same) == doctest::Approx(0.0).scale(1));
  const Box3D pb[] = {b};
  CHECK(std::abs(diou_loss(pb, same) - 7.0 / 6.0) <= 1e-6);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const Box3D p(rng.uniform(-9, 9), rng.uniform(-9, 9), 0, rng.uniform(0.5, 3), rng.uniform(0.5, 3), 1, rng.uniform(-3, 3));
    const Box3D q(rng.uniform(-9, 9), rng.uniform(-9, 9), 0, rng.uniform(0.5, 3), rng.uniform(0.5, 3), 1, rng.uniform(-3, 3));
    const Box3D pp[] = {p}, qq[] = {q};
    const double l = diou_loss(pp, qq);
    CHECK(l >= 0.0);
    CHECK(l < 2.0);
  }
}

TEST_CASE("corner MSE loss") {
  Tensor target({1, 40, 40});
  draw_gaussian(target.channel(0), 40, 40, 20, 20, 2.0);
  CHECK(target.at(0, 20, 20) == 1.0f);
  double sq = 0.0;
  for (float v : target.data()) sq += double(v) * v;
  const Tensor zero({1, 40, 40});
  CHECK(corner_mse_loss(zero, target) == doctest::Approx(sq / 1600.0).epsilon(1e-9));
  CHECK(corner_mse_loss(target, target) == 0.0);

  Tensor half = target;
  for (float& v : half.data()) v *= 0.5f;
  const double e1 = corner_mse_loss(half, target);
  Tensor off = target;
  for (float& v : off.data()) v = 0.0f;  // error = target, twice the error of `half`
  CHECK(std::sqrt(corner_mse_loss(off, target)) == doctest::Approx(2.0 * std::sqrt(e1)).epsilon(1e-6));
}

TEST_CASE("total loss is a linear combination") {
  const LossParts parts{1, 2, 3, 4, 5};
  CHECK(total_loss(parts, {1, 1, 1, 1, 1}) == 15.0);
  CHECK(total_loss(parts, {0, 0, 0, 0, 0}) == 0.0);
  const LossWeights defaults;
  CHECK(defaults.focal == 1.0);
  CHECK(defaults.l1 == 0.25);
  CHECK(defaults.iou == 0.5);
  CHECK(defaults.diou == 1.0);
  CHECK(defaults.corner_mse == 1.0);
  LossWeights scaled = defaults;
  scaled.iou *= 3.0;
  CHECK(total_loss(parts, scaled) - total_loss(parts, defaults) == doctest::Approx(2.0 * 0.5 * 3));
  LossWeights bad;
  bad.l1 = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("target sigma and rendering") {
  CHECK(target_sigma(Box3D(0, 0, 0, 4, 1.8, 1.5, 0), 0.32) == 1.0);
  CHECK(target_sigma(Box3D(0, 0, 0, 12, 9.6, 3, 0), 0.32) == doctest::Approx(5.0));
  GroundTruthSet gts{{{Box3D(5.0, 0.1, -1, 4, 1.8, 1.5, 0.3), 0}, {Box3D(99, 0, 0, 1, 1, 1, 0), 1}}};
  const GraphConfig cfg = testing::toy_config();
  const TrainingTargets t = render_targets(gts, cfg.grid, 2, 32, 32);
  CHECK(t.centres.size() == 1);
  CHECK(t.heatmap.at(0, t.centres[0].row, t.centres[0].col) == 1.0f);
  CHECK(std::count(t.mask.begin(), t.mask.end(), 1) == 1);
  for (float v : t.heatmap.channel(1)) CHECK(v == 0.0f);
}

TEST_CASE("losses vanish on a perfect prediction") {
  const GraphConfig cfg = testing::toy_config();
  GroundTruthSet gts{{{Box3D(3.0, -1.0, -1, 4, 1.8, 1.5, 0.3), 0}, {Box3D(7.0, 2.0, -0.5, 0.8, 0.6, 1.7, -2.0), 1}}};
  const TrainingTargets t = render_targets(gts, cfg.grid, 3, 32, 32);
  // The focal optimum is the indicator of the peaks, not the Gaussian itself.
  Tensor peaks = t.heatmap;
  for (float& v : peaks.data()) v = v == 1.0f ? 1.0f : 0.0f;
  HeadOutput h{peaks, t.regression, Tensor({1, 32, 32}), t.corners};
  for (const auto& e : t.centres) h.iou_prediction.at(0, e.row, e.col) = 1.0f;
  const LossParts parts = evaluate_losses(h, gts, cfg.grid);
  CHECK(parts.focal <= 1e-4);
  CHECK(parts.l1 <= 1e-6);
  CHECK(parts.corner_mse == 0.0);
  CHECK(parts.iou <= 1e-5);
  CHECK(parts.diou <= 1e-5);
}

TEST_CASE("AP examples") {
  const std::vector<GroundTruthSet> two_gt{{{gt(0), gt(10)}}};
  CHECK(*evaluate_ap({{det(0, 0.9), det(10, 0.8)}}, two_gt, 0, 0.5, IouMode::k3d) == doctest::Approx(1.0));
  CHECK(*evaluate_ap({{}}, two_gt, 0, 0.5, IouMode::k3d) == 0.0);
  CHECK(*evaluate_ap({{det(50, 0.95), det(0, 0.9)}}, two_gt, 0, 0.5, IouMode::k3d) == 0.25);
  CHECK(!evaluate_ap({{det(0, 0.9)}}, {GroundTruthSet{}}, 0, 0.5, IouMode::k3d).has_value());
  CHECK_THROWS_AS(evaluate_ap({}, two_gt, 0, 0.5, IouMode::k3d), Error);
}

TEST_CASE("mean AP") {
  const std::optional<double> one[] = {0.7};
  CHECK(*evaluate_map(one) == 0.7);
  const std::optional<double> pair[] = {1.0, 0.0}, rev[] = {0.0, 1.0};
  CHECK(*evaluate_map(pair) == 0.5);
  CHECK(*evaluate_map(rev) == 0.5);
  const std::optional<double> with_gap[] = {1.0, std::nullopt, 0.5};
  CHECK(*evaluate_map(with_gap) == 0.75);
  const std::optional<double> none[] = {std::nullopt};
  CHECK(!evaluate_map(none).has_value());
}

TEST_CASE("AP matches the prefix-enumeration oracle and its monotonicity rules") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t frames = rng.integer(1, 4);
    std::vector<std::vector<Detection>> dets(frames);
    std::vector<GroundTruthSet> gts(frames);
    for (std::size_t f = 0; f < frames; ++f) {
      for (std::size_t i = rng.integer(0, 5); i > 0; --i) gts[f].boxes.push_back(gt(rng.uniform(0, 30), rng.integer(0, 1)));
      for (std::size_t i = rng.integer(0, 8); i > 0; --i) dets[f].push_back(det(rng.uniform(0, 30), rng.uniform(0.05, 0.95), rng.integer(0, 1)));
    }
    for (IouMode mode : {IouMode::kBev, IouMode::k3d}) {
      const auto ap = evaluate_ap(dets, gts, 0, 0.3, mode);
      const auto oracle = testing::brute_force_ap(dets, gts, 0, 0.3, mode);
      REQUIRE(ap.has_value() == oracle.has_value());
      if (!ap) continue;
      CHECK(*ap == doctest::Approx(*oracle).epsilon(1e-12));
      CHECK(*ap >= 0.0);
      CHECK(*ap <= 1.0);

      // A strictly increasing transform of every score leaves AP unchanged.
      auto squashed = dets;
      for (auto& fr : squashed) for (auto& d : fr) d.score = 1.0 / (1.0 + std::exp(-7.0 * d.score));
      CHECK(*evaluate_ap(squashed, gts, 0, 0.3, mode) == doctest::Approx(*ap).epsilon(1e-12));

      // A lowest-scored false positive can only hurt.
      auto with_fp = dets;
      with_fp[0].push_back(det(500.0, 0.001));
      CHECK(*evaluate_ap(with_fp, gts, 0, 0.3, mode) <= *ap + 1e-12);

      // A perfect detection of an unmatched ground truth can only help.
      for (std::size_t f = 0; f < frames; ++f) {
        for (const auto& g : gts[f].boxes) {
          if (g.class_id != 0) continue;
          const bool touched = std::any_of(dets[f].begin(), dets[f].end(), [&](const Detection& d) {
            return d.class_id == 0 && rotated_bev_iou(d.box, g.box) > 0.0;
          });
          if (touched) continue;
          auto with_tp = dets;
          with_tp[f].push_back({g.box, 0, 0.999});
          CHECK(*evaluate_ap(with_tp, gts, 0, 0.3, mode) >= *ap - 1e-12);
        }
      }
    }
  }
}
