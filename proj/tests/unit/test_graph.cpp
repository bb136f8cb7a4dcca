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


#include <algorithm>
#include <cmath>
#include <string>

#include "doctest.h"
#include "oracles.hpp"
#include "rnx/error.hpp"
#include "rnx/graph.hpp"
#include "rnx/init.hpp"

using namespace rnx;
using rnx::testing::random_cloud;
using rnx::testing::random_tensor;
using rnx::testing::Rng;
using rnx::testing::toy_config;

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

float max_abs(const Tensor& t) {
  float m = 0.0f;
  for (float v : t.data()) m = std::max(m, std::abs(v));
  return m;
}

// Zeroes every additive term so that a zero input stays zero through the network.
WeightStore without_offsets(const WeightStore& w) {
  WeightStore out;
  for (const auto& [name, t] : w) {
    if (ends_with(name, ".bias") || ends_with(name, ".bn.beta") || ends_with(name, ".bn.running_mean")) {
      out.insert(name, Tensor(t.shape(), 0.0f));
    } else {
      out.insert(name, t);
    }
  }
  return out;
}

GraphConfig with_neck(GraphConfig cfg, NeckKind neck, std::set<int> positions = {}) {
  cfg.neck = neck;
  cfg.dcn_positions = std::move(positions);
  return cfg;
}

}  // namespace

TEST_CASE("vod shapes through backbone, neck and head") {
  const GraphConfig cfg = GraphConfig::vod();
  const WeightStore w = init_random_weights(cfg, 3);
  const Detector det(cfg, w);
  Rng rng(5);
  const Tensor bev = det.encode(random_cloud(cfg, 300, rng));
  CHECK(bev.shape() == Shape{64, 320, 320});

  const BackboneOutput p = det.backbone_forward(bev);
  CHECK(p.s1.shape() == Shape{64, 160, 160});
  CHECK(p.s2.shape() == Shape{128, 80, 80});
  CHECK(p.s3.shape() == Shape{256, 40, 40});

  const Tensor n = det.neck_forward(p);
  CHECK(n.shape() == Shape{64, 160, 160});

  const HeadOutput h = det.head_forward(n);
  CHECK(h.class_heatmaps.shape() == Shape{3, 160, 160});
  CHECK(h.box_regression.shape() == Shape{8, 160, 160});
  CHECK(h.iou_prediction.shape() == Shape{1, 160, 160});
  CHECK(h.corner_heatmaps.shape() == Shape{3, 160, 160});
  CHECK(all_finite(h.class_heatmaps));
  CHECK(all_finite(h.box_regression));

  for (NeckKind k : {NeckKind::kFpn, NeckKind::kPan}) {
    const GraphConfig c = with_neck(cfg, k);
    CHECK(neck_forward(p, init_random_weights(c, 3), c).shape() == Shape{64, 160, 160});
  }
}

TEST_CASE("tj4d head produces four classes on a 216 grid") {
  const GraphConfig cfg = GraphConfig::tj4d();
  CHECK(cfg.grid.width_cells == 432);
  const WeightStore w = init_random_weights(cfg, 1);
  Rng rng(2);
  const HeadOutput h = head_forward(random_tensor({64, 216, 216}, rng), w, cfg);
  CHECK(h.class_heatmaps.shape() == Shape{4, 216, 216});
  CHECK(h.corner_heatmaps.shape() == Shape{4, 216, 216});
  CHECK(h.box_regression.shape() == Shape{8, 216, 216});
}

TEST_CASE("zero input with zero biases gives zero pyramid and neck for every neck") {
  for (NeckKind k : {NeckKind::kFpn, NeckKind::kPan, NeckKind::kMdfen}) {
    CAPTURE(to_string(k));
    GraphConfig cfg = with_neck(toy_config(), k, k == NeckKind::kMdfen ? std::set<int>{1, 4} : std::set<int>{});
    for (Topology t : {Topology::kTrain, Topology::kDeploy}) {
      cfg.topology = Topology::kTrain;
      WeightStore w = without_offsets(init_random_weights(cfg, 11));
      if (t == Topology::kDeploy) {
        w = reparameterize_weights(w, cfg);
        cfg.topology = Topology::kDeploy;
      }
      const Detector det(cfg, w);
      const BackboneOutput p = det.backbone_forward(Tensor({64, 64, 64}, 0.0f));
      CHECK(max_abs(p.s1) == 0.0f);
      CHECK(max_abs(p.s2) == 0.0f);
      CHECK(max_abs(p.s3) == 0.0f);
      CHECK(max_abs(det.neck_forward(p)) == 0.0f);
    }
  }
}

TEST_CASE("zero head weights give one-half everywhere on sigmoid outputs") {
  const GraphConfig cfg = toy_config();
  WeightStore w = init_random_weights(cfg, 4);
  for (const char* branch : {"head.cls", "head.iou", "head.corner", "head.box"}) {
    for (const char* suffix : {".weight", ".bias"}) {
      const std::string name = std::string(branch) + suffix;
      w.set(name, Tensor(w.at(name).shape(), 0.0f));
    }
  }
  Rng rng(9);
  const HeadOutput h = head_forward(random_tensor({64, 32, 32}, rng), w, cfg);
  for (const Tensor* t : {&h.class_heatmaps, &h.iou_prediction, &h.corner_heatmaps}) {
    for (float v : t->data()) REQUIRE(v == doctest::Approx(0.5f));
  }
  CHECK(max_abs(h.box_regression) == 0.0f);
}

TEST_CASE("an empty cloud equals the head applied to an all-zero grid") {
  const GraphConfig cfg = toy_config();
  const WeightStore w = init_random_weights(cfg, 21);
  const Detector det(cfg, w);
  const HeadOutput from_cloud = det.forward(RadarPointCloud{cfg.schema, {}});
  const HeadOutput from_zero =
      det.head_forward(det.neck_forward(det.backbone_forward(Tensor({64, 64, 64}, 0.0f))));
  CHECK(max_abs_diff(from_cloud, from_zero) == 0.0f);
}

TEST_CASE("train and deploy topologies agree stage by stage") {
  GraphConfig cfg = with_neck(toy_config(), NeckKind::kMdfen, {2, 4});
  cfg.rep_branches = 2;
  const WeightStore train = init_random_weights(cfg, 8);
  const Detector a(cfg, train);
  GraphConfig dcfg = cfg;
  dcfg.topology = Topology::kDeploy;
  const Detector b(dcfg, reparameterize_weights(train, cfg));

  Rng rng(13);
  const Tensor bev = a.encode(random_cloud(cfg, 400, rng));
  const BackboneOutput pa = a.backbone_forward(bev);
  const BackboneOutput pb = b.backbone_forward(bev);
  CHECK(max_abs_diff(pa.s1, pb.s1) <= 1e-4f);
  CHECK(max_abs_diff(pa.s2, pb.s2) <= 1e-4f);
  CHECK(max_abs_diff(pa.s3, pb.s3) <= 1e-4f);
  const Tensor na = a.neck_forward(pa);
  CHECK(max_abs_diff(na, b.neck_forward(pa)) <= 1e-4f);
  CHECK(max_abs_diff(a.head_forward(na), b.head_forward(na)) <= 1e-4f);
}

TEST_CASE("parameter counts order the necks and shrink after reparameterization") {
  const GraphConfig base = GraphConfig::vod();
  const GraphConfig fpn = with_neck(base, NeckKind::kFpn);
  const GraphConfig pan = with_neck(base, NeckKind::kPan);
  const GraphConfig mdfen = with_neck(base, NeckKind::kMdfen, {4});
  for (Topology t : {Topology::kTrain, Topology::kDeploy}) {
    GraphConfig f = fpn, p = pan, m = mdfen;
    f.topology = p.topology = m.topology = t;
    CHECK(count_parameters(f) < count_parameters(p));
    CHECK(count_parameters(p) < count_parameters(m));
  }
  for (const GraphConfig& c : {fpn, pan, mdfen}) {
    GraphConfig d = c;
    d.topology = Topology::kDeploy;
    CHECK(count_parameters(d) < count_parameters(c));
    GraphConfig dense = d;
    dense.backbone = BackboneKind::kDense;
    CHECK(count_parameters(d) < count_parameters(dense));
  }
  GraphConfig d = mdfen;
  d.topology = Topology::kDeploy;
  GraphConfig dense = d;
  dense.backbone = BackboneKind::kDense;
  const double ratio = double(count_parameters(d)) / double(count_parameters(dense));
  CHECK(ratio == doctest::Approx(0.29).epsilon(0.08 / 0.29));
  CHECK(std::abs(double(count_parameters(d)) - 1.58e6) <= 0.25 * 1.58e6);
}

TEST_CASE("counting from a store matches counting from the manifest") {
  GraphConfig cfg = toy_config();
  const WeightStore w = init_random_weights(cfg, 2);
  CHECK(count_parameters(w, cfg) == count_parameters(cfg));
  CHECK(Detector(cfg, w).parameter_count() == count_parameters(cfg));
  GraphConfig d = cfg;
  d.topology = Topology::kDeploy;
  const WeightStore dw = reparameterize_weights(w, cfg);
  CHECK(count_parameters(dw, d) == count_parameters(d));
  CHECK(Detector(d, dw).parameter_count() == count_parameters(d));
}

TEST_CASE("neck and position validation") {
  GraphConfig cfg = toy_config();
  CHECK_THROWS_AS(with_neck(cfg, NeckKind::kFpn, {2}).validate(), ConfigError);
  CHECK_THROWS_AS(with_neck(cfg, NeckKind::kPan, {4}).validate(), ConfigError);
  CHECK_THROWS_AS(with_neck(cfg, NeckKind::kMdfen, {}).validate(), ConfigError);
  CHECK_THROWS_AS(with_neck(cfg, NeckKind::kMdfen, {0}).validate(), ConfigError);
  CHECK_THROWS_AS(with_neck(cfg, NeckKind::kMdfen, {6}).validate(), ConfigError);
  CHECK_NOTHROW(with_neck(cfg, NeckKind::kMdfen, {1, 2, 3, 4, 5}).validate());
  CHECK_NOTHROW(with_neck(cfg, NeckKind::kPan).validate());
}

TEST_CASE("backbone rejects grids not divisible by eight and wrong channel counts") {
  const GraphConfig cfg = toy_config();
  const Detector det(cfg, init_random_weights(cfg, 1));
  CHECK_THROWS_AS(det.backbone_forward(Tensor({64, 60, 64})), ShapeError);
  CHECK_THROWS_AS(det.backbone_forward(Tensor({32, 64, 64})), ShapeError);
}

TEST_CASE("every dcn position constructs and runs") {
  Rng rng(30);
  const GraphConfig base = toy_config();
  const RadarPointCloud cloud = random_cloud(base, 200, rng);
  for (int pos = 1; pos <= 5; ++pos) {
    CAPTURE(pos);
    const GraphConfig cfg = with_neck(base, NeckKind::kMdfen, {pos});
    const WeightStore w = init_random_weights(cfg, 40 + pos);
    CHECK(w.contains("neck.dcn" + std::to_string(pos) + ".offset.weight"));
    const HeadOutput h = full_forward(cloud, w, cfg);
    CHECK(h.class_heatmaps.shape() == Shape{3, 32, 32});
    CHECK(all_finite(h.box_regression));
  }
}

TEST_CASE("a missing weight is reported by name") {
  const GraphConfig cfg = toy_config();
  const WeightStore full = init_random_weights(cfg, 6);
  const std::string victim = "backbone.stage1.block2.pw_0.weight";
  REQUIRE(full.contains(victim));
  WeightStore partial;
  for (const auto& [name, t] : full) {
    if (name != victim) partial.insert(name, t);
  }
  try {
    Detector det(cfg, partial);
    FAIL("expected a WeightError");
  } catch (const WeightError& e) {
    CHECK(std::string(e.what()).find(victim) != std::string::npos);
  }
}

TEST_CASE("a weight with the wrong shape is rejected") {
  const GraphConfig cfg = toy_config();
  WeightStore w = init_random_weights(cfg, 6);
  w.set("head.cls.weight", Tensor({2, 64, 1, 1}));
  CHECK_THROWS_AS(Detector(cfg, w), WeightError);
}

TEST_CASE("reparameterized store contains only deploy entries") {
  const GraphConfig cfg = toy_config();
  const WeightStore d = reparameterize_weights(init_random_weights(cfg, 7), cfg);
  GraphConfig dcfg = cfg;
  dcfg.topology = Topology::kDeploy;
  std::size_t expected = 0;
  for (const ParamSpec& p : parameter_manifest(dcfg)) {
    REQUIRE(d.contains(p.name));
    CHECK(d.at(p.name).shape() == p.shape);
    ++expected;
  }
  CHECK(d.size() == expected);
  CHECK_FALSE(d.contains("backbone.stage0.block0.dw_3x3.weight"));
}
