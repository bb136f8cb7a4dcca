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


// Prints one PASS/FAIL line per acceptance criterion and exits nonzero if
// any criterion fails. `--only N` runs a single criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "oracles.hpp"
#include "rnx/bench.hpp"
#include "rnx/dcn.hpp"
#include "rnx/geometry.hpp"
#include "rnx/graph.hpp"
#include "rnx/init.hpp"
#include "rnx/losses.hpp"
#include "rnx/metrics.hpp"
#include "rnx/ops.hpp"
#include "rnx/pillar.hpp"
#include "rnx/pipeline.hpp"
#include "rnx/repdwc.hpp"

using namespace rnx;
using testing::Rng;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects sub-checks; the first failure is kept in the detail line.
class Verdict {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok && pass_) {
      pass_ = false;
      failure_ = what;
    }
  }
  Outcome done(const std::string& summary) const {
    return {pass_, pass_ ? summary : failure_ + " | " + summary};
  }

 private:
  bool pass_ = true;
  std::string failure_;
};

// Pairs each detection of `a` with the closest unmatched detection of the
// same class in `b`, then returns the largest field difference. Pairing
// instead of comparing in rank order keeps near-tied scores from swapping
// partners.
double matched_detection_diff(const std::vector<Detection>& a, const std::vector<Detection>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  const auto field_diff = [](const Detection& p, const Detection& q) {
    return std::max({std::abs(p.box.x - q.box.x), std::abs(p.box.y - q.box.y),
                     std::abs(p.box.z - q.box.z), std::abs(p.box.l - q.box.l),
                     std::abs(p.box.w - q.box.w), std::abs(p.box.h - q.box.h),
                     std::abs(normalize_yaw(p.box.yaw - q.box.yaw)), std::abs(p.score - q.score)});
  };
  std::vector<bool> used(b.size(), false);
  double worst = 0.0;
  for (const Detection& p : a) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = b.size();
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j] || b[j].class_id != p.class_id) continue;
      const double d = field_diff(p, b[j]);
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    if (best_j == b.size()) return std::numeric_limits<double>::infinity();
    used[best_j] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

struct GraphEquivalence {
  double field_sup = 0.0;
  double detection_sup = 0.0;
  std::size_t detections = 0;
};

// Train vs deploy on `clouds` for one configuration with seeded weights.
GraphEquivalence graph_equivalence(const GraphConfig& cfg, std::uint64_t seed,
                                   const std::vector<RadarPointCloud>& clouds) {
  const WeightStore train = init_random_weights(cfg, seed);
  GraphConfig dcfg = cfg;
  dcfg.topology = Topology::kDeploy;
  const Detector a(cfg, train);
  const Detector b(dcfg, reparameterize_weights(train, cfg));
  // Random weights put most scores close to 0.1, so the comparison uses a
  // lower threshold and no top-k cut to keep every peak in play.
  RuntimeOptions runtime;
  runtime.score_threshold = 0.05;
  runtime.top_k = 100000;
  GraphEquivalence eq;
  for (const RadarPointCloud& cloud : clouds) {
    const HeadOutput ha = a.forward(cloud), hb = b.forward(cloud);
    eq.field_sup = std::max(eq.field_sup, double(max_abs_diff(ha, hb)));
    const auto da = postprocess(ha, cfg.grid, runtime), db = postprocess(hb, cfg.grid, runtime);
    eq.detection_sup = std::max(eq.detection_sup, matched_detection_diff(da, db));
    eq.detections += da.size();
  }
  return eq;
}

std::vector<RadarPointCloud> toy_clouds(const GraphConfig& cfg, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<RadarPointCloud> clouds;
  for (std::size_t i = 0; i < count; ++i) clouds.push_back(testing::random_cloud(cfg, 200 + 40 * i, rng));
  return clouds;
}

Outcome block_reparameterization() {
  const auto start = Clock::now();
  Rng rng(101);
  Verdict v;
  double worst = 0.0;
  const int blocks = 500;
  for (int i = 0; i < blocks; ++i) {
    const std::size_t cin = rng.integer(8, 128);
    const std::size_t stride = rng.coin() ? 1 : 2;
    const std::size_t m = rng.integer(1, 3);
    const std::size_t cout = rng.coin() ? cin : rng.integer(8, 128);
    const RepDwcTrainParams train = testing::random_train_block(cin, cout, stride, m, rng);
    const std::size_t h = rng.integer(3, 9), w = rng.integer(3, 9);
    const Tensor x = testing::random_tensor({cin, h, w}, rng);
    const double d = max_abs_diff(rep_dwc_block_forward(x, train),
                                  rep_dwc_block_forward(x, reparameterize_block(train)));
    worst = std::max(worst, d);
  }
  const double elapsed = seconds_since(start);
  v.require(worst <= 1e-4, fmt::format("max |train - deploy| {:.3g} > 1e-4", worst));
  v.require(elapsed < 60.0, fmt::format("took {:.1f} s, limit 60 s", elapsed));
  return v.done(fmt::format("{} blocks, max diff {:.3g}, {:.1f} s", blocks, worst, elapsed));
}

Outcome graph_reparameterization() {
  const auto start = Clock::now();
  const GraphConfig cfg = testing::toy_config();
  const GraphEquivalence eq = graph_equivalence(cfg, 202, toy_clouds(cfg, 10, 203));
  const double elapsed = seconds_since(start);
  Verdict v;
  v.require(eq.field_sup <= 1e-3, fmt::format("head sup-norm {:.3g} > 1e-3", eq.field_sup));
  v.require(eq.detection_sup <= 1e-3, fmt::format("detection diff {:.3g} > 1e-3", eq.detection_sup));
  v.require(eq.detections > 0, "no detections to compare");
  v.require(elapsed < 60.0, fmt::format("took {:.1f} s, limit 60 s", elapsed));
  return v.done(fmt::format("MDFEN{{4}}, 10 clouds, head sup {:.3g}, {} detections, det diff {:.3g}, {:.1f} s",
                            eq.field_sup, eq.detections, eq.detection_sup, elapsed));
}

Outcome dcn_oracle() {
  Rng rng(303);
  Verdict v;
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t groups = std::size_t{1} << rng.integer(0, 2);
    const std::size_t c = groups * rng.integer(1, 16 / groups);
    const std::size_t points = std::vector<std::size_t>{1, 9, 25}[rng.integer(0, 2)];
    const DcnV3Params p = testing::random_dcn(c, groups, points, rng, rng.uniform(0.5, 3.0));
    const Tensor x = testing::random_tensor({c, rng.integer(1, 8), rng.integer(1, 8)}, rng);
    worst = std::max(worst, double(max_abs_diff(dcnv3_forward(x, p), testing::literal_dcnv3(x, p))));
  }
  v.require(worst <= 1e-5, fmt::format("oracle diff {:.3g} > 1e-5", worst));

  // No offsets and uniform modulation: an averaging 3x3 depthwise conv between the projections.
  double reduction = 0.0;
  for (int i = 0; i < 5; ++i) {
    DcnV3Params p = testing::random_dcn(8, 4, 9, rng);
    for (Tensor* t : {&p.offset_weight, &p.modulation_weight}) std::fill(t->data().begin(), t->data().end(), 0.0f);
    for (auto* b : {&p.offset_bias, &p.modulation_bias}) std::fill(b->begin(), b->end(), 0.0f);
    const Tensor x = testing::random_tensor({8, rng.integer(2, 8), rng.integer(2, 8)}, rng);
    const Tensor box({8, 1, 3, 3}, 1.0f / 9.0f);
    const Tensor ref = conv2d(conv2d(conv2d(x, p.input_proj_weight, p.input_proj_bias, {}), box, {},
                                     {.stride = 1, .padding = 1, .groups = 8}),
                              p.output_proj_weight, p.output_proj_bias, {});
    reduction = std::max(reduction, double(max_abs_diff(dcnv3_forward(x, p), ref)));
  }
  v.require(reduction <= 1e-5, fmt::format("box-filter reduction diff {:.3g} > 1e-5", reduction));
  return v.done(fmt::format("50 configs, max oracle diff {:.3g}, reduction diff {:.3g}", worst, reduction));
}

GraphConfig vod_with(NeckKind neck, Topology t, BackboneKind backbone = BackboneKind::kRepDwc) {
  GraphConfig cfg = GraphConfig::vod();
  cfg.neck = neck;
  cfg.dcn_positions = neck == NeckKind::kMdfen ? std::set<int>{4} : std::set<int>{};
  cfg.topology = t;
  cfg.backbone = backbone;
  return cfg;
}

Outcome parameter_reduction() {
  const std::size_t rep = count_parameters(vod_with(NeckKind::kMdfen, Topology::kDeploy));
  const std::size_t dense = count_parameters(vod_with(NeckKind::kMdfen, Topology::kDeploy, BackboneKind::kDense));
  const double ratio = double(rep) / double(dense);
  const double rel = (double(rep) - 1.58e6) / 1.58e6;
  Verdict v;
  v.require(std::abs(ratio - 0.29) <= 0.08, fmt::format("ratio {:.4f} outside 0.29 +- 0.08", ratio));
  v.require(std::abs(rel) <= 0.25, fmt::format("count {} is {:+.1f}% from 1.580M", rep, rel * 100));
  return v.done(fmt::format("Rep-DWC {} / dense {} = {:.4f}; {:+.1f}% from 1.580M", rep, dense, ratio, rel * 100));
}

Outcome parameter_ordering() {
  Verdict v;
  std::string summary;
  for (Topology t : {Topology::kDeploy, Topology::kTrain}) {
    const std::size_t f = count_parameters(vod_with(NeckKind::kFpn, t));
    const std::size_t p = count_parameters(vod_with(NeckKind::kPan, t));
    const std::size_t m = count_parameters(vod_with(NeckKind::kMdfen, t));
    v.require(f < p && p < m, fmt::format("{}: FPN {} PAN {} MDFEN {} not increasing", to_string(t), f, p, m));
    if (summary.empty()) summary = fmt::format("deploy FPN {} < PAN {} < MDFEN {}", f, p, m);
  }
  return v.done(summary + " (train layout also ordered)");
}

Outcome rotated_iou() {
  const auto start = Clock::now();
  Rng rng(606);
  Verdict v;
  double worst = 0.0;
  std::size_t overlapping = 0;
  for (int i = 0; i < 200; ++i) {
    const Box3D a(rng.uniform(-2, 2), rng.uniform(-2, 2), 0, rng.uniform(0.5, 4), rng.uniform(0.5, 4), 1,
                  rng.uniform(-3.2, 3.2));
    const Box3D b(a.x + rng.uniform(-2, 2), a.y + rng.uniform(-2, 2), 0, rng.uniform(0.5, 4), rng.uniform(0.5, 4), 1,
                  rng.uniform(-3.2, 3.2));
    const double exact = rotated_bev_iou(a, b);
    overlapping += exact > 0.0;
    worst = std::max(worst, std::abs(exact - testing::monte_carlo_bev_iou(a, b, 1000000, rng)));
  }
  const double octagon =
      rotated_bev_iou(Box3D(0, 0, 0, 1, 1, 1, 0), Box3D(0, 0, 0, 1, 1, 1, std::acos(-1.0) / 4));
  const double elapsed = seconds_since(start);
  v.require(worst <= 1e-2, fmt::format("Monte-Carlo gap {:.3g} > 1e-2", worst));
  v.require(std::abs(octagon - 0.7071) <= 1e-3, fmt::format("45-degree squares give {:.6f}", octagon));
  v.require(overlapping >= 100, fmt::format("only {} of 200 pairs overlap", overlapping));
  v.require(elapsed < 120.0, fmt::format("took {:.1f} s, limit 120 s", elapsed));
  return v.done(fmt::format("200 pairs ({} overlapping), max gap {:.3g}; octagon {:.6f}; {:.1f} s", overlapping,
                            worst, octagon, elapsed));
}

Detection unit_det(double x, double score, std::size_t cls = 0) { return {Box3D(x, 0, 0, 2, 2, 2, 0), cls, score}; }
LabeledBox unit_gt(double x, std::size_t cls = 0) { return {Box3D(x, 0, 0, 2, 2, 2, 0), cls}; }

Outcome average_precision() {
  Verdict v;
  const std::vector<GroundTruthSet> two{{{unit_gt(0), unit_gt(10)}}};
  const double hand = evaluate_ap({{unit_det(50, 0.95), unit_det(0, 0.9)}}, two, 0, 0.5, IouMode::k3d).value();
  v.require(hand == 0.25, fmt::format("FP-then-TP case gives {}", hand));
  const double perfect = evaluate_ap({{unit_det(0, 0.9), unit_det(10, 0.8)}}, two, 0, 0.5, IouMode::k3d).value();
  v.require(perfect == 1.0, fmt::format("perfect set gives {}", perfect));

  Rng rng(707);
  std::size_t compared = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t frames = rng.integer(1, 4);
    std::vector<std::vector<Detection>> dets(frames);
    std::vector<GroundTruthSet> gts(frames);
    for (std::size_t f = 0; f < frames; ++f) {
      for (std::size_t i = rng.integer(1, 5); i > 0; --i) gts[f].boxes.push_back(unit_gt(rng.uniform(0, 30), rng.integer(0, 1)));
      for (std::size_t i = rng.integer(0, 8); i > 0; --i) {
        dets[f].push_back(unit_det(rng.uniform(0, 30), rng.uniform(0.05, 0.95), rng.integer(0, 1)));
      }
    }
    for (IouMode mode : {IouMode::kBev, IouMode::k3d}) {
      const auto ap = evaluate_ap(dets, gts, 0, 0.3, mode);
      const auto oracle = testing::brute_force_ap(dets, gts, 0, 0.3, mode);
      v.require(ap.has_value() == oracle.has_value(), "definedness differs from the oracle");
      if (!ap || !oracle) continue;
      ++compared;
      worst = std::max(worst, std::abs(*ap - *oracle));
      v.require(*ap >= 0.0 && *ap <= 1.0, "AP outside [0, 1]");

      auto squashed = dets;
      for (auto& fr : squashed) for (auto& d : fr) d.score = 1.0 / (1.0 + std::exp(-7.0 * d.score));
      v.require(std::abs(*evaluate_ap(squashed, gts, 0, 0.3, mode) - *ap) <= 1e-12,
                "AP changed under a monotone score transform");

      auto with_fp = dets;
      with_fp[0].push_back(unit_det(500.0, 0.001));
      v.require(*evaluate_ap(with_fp, gts, 0, 0.3, mode) <= *ap + 1e-12, "a lowest-ranked FP raised AP");

      for (std::size_t f = 0; f < frames; ++f) {
        for (const auto& g : gts[f].boxes) {
          if (g.class_id != 0) continue;
          const bool touched = std::any_of(dets[f].begin(), dets[f].end(), [&](const Detection& d) {
            return d.class_id == 0 && rotated_bev_iou(d.box, g.box) > 0.0;
          });
          if (touched) continue;
          auto with_tp = dets;
          with_tp[f].push_back({g.box, 0, 0.999});
          v.require(*evaluate_ap(with_tp, gts, 0, 0.3, mode) >= *ap - 1e-12, "a top-ranked TP lowered AP");
        }
      }
    }
  }
  v.require(worst <= 1e-12, fmt::format("oracle gap {:.3g}", worst));
  return v.done(fmt::format("hand case {}, perfect {}, {} randomized sets match the oracle (gap {:.1g})", hand,
                            perfect, compared, worst));
}

Outcome loss_arithmetic() {
  Verdict v;
  const double ln2q = 0.25 * std::log(2.0);
  const double f1 = focal_loss(Tensor({1, 1, 1}, 0.5f), Tensor({1, 1, 1}, 1.0f));
  const double f0 = focal_loss(Tensor({1, 1, 1}, 0.5f), Tensor({1, 1, 1}, 0.0f));
  v.require(std::abs(f1 - ln2q) <= 1e-6, fmt::format("focal at a peak {:.8f}", f1));
  v.require(std::abs(f0 - ln2q) <= 1e-6, fmt::format("focal off-peak {:.8f}", f0));

  Tensor pred_reg({8, 2, 2}), target_reg({8, 2, 2});
  for (std::size_t c = 0; c < 8; ++c) target_reg.at(c, 1, 1) = 0.5f;
  const std::vector<std::uint8_t> mask{0, 0, 0, 1};
  const double l1 = l1_regression_loss(pred_reg, target_reg, mask);
  v.require(std::abs(l1 - 0.5) <= 1e-6, fmt::format("L1 {:.8f}", l1));

  const Box3D g(0, 0, 0, 2, 1, 1, 0), p(2.0 / 3.0, 0, 0, 2, 1, 1, 0);
  const double iou_pred[] = {0.8};
  const Box3D ps[] = {p}, gs[] = {g};
  const double iou = iou_consistency_loss(iou_pred, ps, gs);
  v.require(std::abs(iou - 0.3) <= 1e-6, fmt::format("IoU consistency {:.8f}", iou));

  const Box3D ca[] = {Box3D(0, 0, 0, 1, 1, 1, 0)}, cb[] = {Box3D(1, 0, 0, 1, 1, 1, 0)};
  const double d = diou_loss(cb, ca);
  v.require(std::abs(d - 7.0 / 6.0) <= 1e-6, fmt::format("dIoU loss {:.8f}", d));

  Tensor bump({1, 24, 24});
  draw_gaussian(bump.channel(0), 24, 24, 11, 12, 2.0);
  double sq = 0.0;
  for (float x : bump.data()) sq += double(x) * x;
  const double corner = corner_mse_loss(Tensor({1, 24, 24}), bump);
  v.require(std::abs(corner - sq / 576.0) <= 1e-6, fmt::format("corner MSE {:.8f}", corner));

  const LossParts parts{1, 2, 3, 4, 5};
  const double total = total_loss(parts, {1, 1, 1, 1, 1});
  v.require(std::abs(total - 15.0) <= 1e-6, fmt::format("total with unit weights {}", total));
  v.require(total_loss(parts, {0, 0, 0, 0, 0}) == 0.0, "total with zero weights is not 0");

  // Scaling one weight by s moves the total by (s - 1) * weight * part.
  Rng rng(808);
  double linearity = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const LossParts q{rng.uniform(0, 5), rng.uniform(0, 5), rng.uniform(0, 5), rng.uniform(0, 5), rng.uniform(0, 5)};
    const LossWeights base{rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 2)};
    const double t0 = total_loss(q, base);
    const double s = rng.uniform(0, 4);
    double LossWeights::*const fields[] = {&LossWeights::focal, &LossWeights::l1, &LossWeights::iou,
                                          &LossWeights::diou, &LossWeights::corner_mse};
    const double values[] = {q.focal, q.l1, q.iou, q.diou, q.corner_mse};
    for (int k = 0; k < 5; ++k) {
      LossWeights scaled = base;
      scaled.*fields[k] *= s;
      const double expected = t0 + (s - 1.0) * (base.*fields[k]) * values[k];
      linearity = std::max(linearity, std::abs(total_loss(q, scaled) - expected));
    }
  }
  v.require(linearity <= 1e-9, fmt::format("linearity gap {:.3g}", linearity));
  return v.done(fmt::format("focal {:.6f}/{:.6f}, L1 {:.6f}, IoU {:.6f}, dIoU {:.6f}, corner {:.6f}, total {}, "
                            "linearity gap {:.1g}",
                            f1, f0, l1, iou, d, corner, total, linearity));
}

bool in_range(const GridConfig& g, std::span<const float> row) {
  const double x = row[0], y = row[1], z = row[2];
  return x >= g.x_min && x < g.x_max && y >= g.y_min && y < g.y_max && z >= g.z_min && z < g.z_max;
}

Outcome pillarization() {
  const GraphConfig cfg = testing::toy_config();
  const WeightStore w = init_random_weights(cfg, 909);
  Rng rng(910);
  const RadarPointCloud cloud = testing::random_cloud(cfg, 500, rng);
  const auto encode = [&](const RadarPointCloud& c) {
    const PillarSet p = pillarize(c, cfg.grid);
    return scatter_to_bev(pfn_forward(p, w, cfg.grid), p, cfg.grid);
  };
  const Tensor reference = encode(cloud);
  Verdict v;

  std::vector<std::size_t> order(cloud.size());
  std::iota(order.begin(), order.end(), 0);
  int identical = 0;
  for (int s = 0; s < 100; ++s) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    RadarPointCloud shuffled{cloud.schema, {}};
    for (std::size_t i : order) shuffled.values.insert(shuffled.values.end(), cloud.row(i).begin(), cloud.row(i).end());
    identical += encode(shuffled) == reference;
  }
  v.require(identical == 100, fmt::format("{} of 100 shuffles bit-identical", identical));

  RadarPointCloud inside{cloud.schema, {}}, outside{cloud.schema, {}};
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    RadarPointCloud& dest = in_range(cfg.grid, cloud.row(i)) ? inside : outside;
    dest.values.insert(dest.values.end(), cloud.row(i).begin(), cloud.row(i).end());
  }
  const PillarSet all = pillarize(cloud, cfg.grid);
  std::size_t kept = 0;
  for (const Pillar& p : all.pillars) kept += p.count;
  v.require(kept == inside.size(), fmt::format("{} points in pillars, {} in range", kept, inside.size()));
  v.require(outside.size() > 0, "the cloud has no out-of-range points");
  v.require(pillarize(outside, cfg.grid).empty(), "out-of-range points formed pillars");
  v.require(encode(inside) == reference, "dropping out-of-range points changed the canvas");
  return v.done(fmt::format("100/100 shuffles identical; {} of 500 points in range, {} excluded", inside.size(),
                            outside.size()));
}

Outcome benchmark_direction() {
  const GraphConfig cfg = testing::toy_config();
  const WeightStore train = init_random_weights(cfg, 1010);
  GraphConfig dcfg = cfg;
  dcfg.topology = Topology::kDeploy;
  const WeightStore deploy = reparameterize_weights(train, cfg);
  const std::vector<RadarPointCloud> clouds = toy_clouds(cfg, 1, 1011);

  // Alternate single timed runs so drift in machine load hits both equally.
  const std::size_t runs = 80;
  run_benchmark(cfg, train, clouds, 3, 1);
  run_benchmark(dcfg, deploy, clouds, 3, 1);
  std::vector<double> t_train, t_deploy;
  for (std::size_t i = 0; i < runs; ++i) {
    if (i % 2 == 0) {
      t_train.push_back(run_benchmark(cfg, train, clouds, 0, 1).latencies_ms[0]);
      t_deploy.push_back(run_benchmark(dcfg, deploy, clouds, 0, 1).latencies_ms[0]);
    } else {
      t_deploy.push_back(run_benchmark(dcfg, deploy, clouds, 0, 1).latencies_ms[0]);
      t_train.push_back(run_benchmark(cfg, train, clouds, 0, 1).latencies_ms[0]);
    }
  }
  const double mt = median(t_train), md = median(t_deploy);
  std::size_t deploy_wins = 0;
  for (std::size_t i = 0; i < runs; ++i) deploy_wins += t_deploy[i] < t_train[i];
  Verdict v;
  v.require(md < mt, fmt::format("deploy median {:.2f} ms >= train median {:.2f} ms", md, mt));
  return v.done(fmt::format("{} interleaved runs each: train median {:.2f} ms, deploy median {:.2f} ms "
                            "({:.1f}% faster, deploy quicker in {}/{} pairs)",
                            runs, mt, md, 100.0 * (mt - md) / mt, deploy_wins, runs));
}

Outcome dcn_positions() {
  const auto start = Clock::now();
  const GraphConfig base = testing::toy_config();
  const std::vector<RadarPointCloud> clouds = toy_clouds(base, 10, 1111);
  const std::vector<std::set<int>> variants{{1}, {2}, {3}, {4}, {5}, {1, 2, 4}};
  Verdict v;
  std::string summary;
  for (const auto& positions : variants) {
    GraphConfig cfg = base;
    cfg.dcn_positions = positions;
    const std::string name = fmt::format("{{{}}}", fmt::join(positions, ","));
    const GraphEquivalence eq = graph_equivalence(cfg, 1112, clouds);
    v.require(eq.field_sup <= 1e-3, fmt::format("{}: head sup-norm {:.3g}", name, eq.field_sup));
    v.require(eq.detection_sup <= 1e-3, fmt::format("{}: detection diff {:.3g}", name, eq.detection_sup));
    v.require(eq.detections > 0, name + ": no detections");
    summary += fmt::format("{}{} sup {:.1g} over {} dets", summary.empty() ? "" : "; ", name, eq.field_sup,
                           eq.detections);
  }
  return v.done(fmt::format("{}; {:.1f} s", summary, seconds_since(start)));
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc == 3 && std::strcmp(argv[1], "--only") == 0) only = std::atoi(argv[2]);

  const std::vector<Criterion> criteria{
      {1, "block re-parameterization", block_reparameterization},
      {2, "graph re-parameterization", graph_reparameterization},
      {3, "deformable conv oracle", dcn_oracle},
      {4, "parameter reduction", parameter_reduction},
      {5, "parameter ordering", parameter_ordering},
      {6, "rotated IoU", rotated_iou},
      {7, "average precision", average_precision},
      {8, "loss arithmetic", loss_arithmetic},
      {9, "pillarization", pillarization},
      {10, "benchmark direction", benchmark_direction},
      {11, "deformable conv positions", dcn_positions},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (only != 0 && c.id != only) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s [%2d] %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
