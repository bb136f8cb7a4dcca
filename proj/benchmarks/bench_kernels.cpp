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


#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "rnx/graph.hpp"
#include "rnx/init.hpp"
#include "rnx/ops.hpp"

namespace {

rnx::Tensor noise(const rnx::Shape& shape, unsigned seed) {
  rnx::Tensor t(shape);
  std::mt19937 gen(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (float& v : t.data()) v = u(gen);
  return t;
}

rnx::GraphConfig toy_graph() {
  rnx::GraphConfig cfg = rnx::GraphConfig::vod();
  cfg.grid.width_cells = 64;
  cfg.grid.height_cells = 64;
  cfg.grid.x_max = 10.24;
  cfg.grid.y_min = -5.12;
  cfg.grid.y_max = 5.12;
  return cfg;
}

rnx::RadarPointCloud toy_cloud(const rnx::GraphConfig& cfg, std::size_t n) {
  std::mt19937 gen(11);
  std::uniform_real_distribution<float> ux(0.0f, 10.2f), uy(-5.1f, 5.1f), uz(-2.5f, 1.5f), uf(-3.0f, 3.0f);
  rnx::RadarPointCloud cloud{cfg.schema, {}};
  for (std::size_t i = 0; i < n; ++i) {
    cloud.values.insert(cloud.values.end(), {ux(gen), uy(gen), uz(gen), uf(gen), uf(gen), uf(gen), 0.0f});
  }
  return cloud;
}

void BM_DenseConv3x3(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const rnx::Tensor x = noise({c, 40, 40}, 1), k = noise({c, c, 3, 3}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(rnx::conv2d(x, k, {}, {1, 1, 1}));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(c * c * 9 * 40 * 40));
}
BENCHMARK(BM_DenseConv3x3)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_DepthwiseConv3x3(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const rnx::Tensor x = noise({c, 40, 40}, 1), k = noise({c, 1, 3, 3}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(rnx::depthwise_conv2d(x, k, {}, 1, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(c * 9 * 40 * 40));
}
BENCHMARK(BM_DepthwiseConv3x3)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_PointwiseConv(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const rnx::Tensor x = noise({c, 40, 40}, 1), k = noise({c, c, 1, 1}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(rnx::conv2d(x, k, {}, {1, 0, 1}));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(c * c * 40 * 40));
}
BENCHMARK(BM_PointwiseConv)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

// Full forward pass on a 64x64 grid, training layout (arg 0) or fused (arg 1).
void BM_Forward(benchmark::State& state) {
  rnx::GraphConfig cfg = toy_graph();
  cfg.rep_branches = static_cast<std::size_t>(state.range(1));
  const rnx::WeightStore train = rnx::init_random_weights(cfg, 1);
  const bool deploy = state.range(0) == 1;
  rnx::GraphConfig run_cfg = cfg;
  if (deploy) run_cfg.topology = rnx::Topology::kDeploy;
  const rnx::Detector det(run_cfg, deploy ? rnx::reparameterize_weights(train, cfg) : train);
  const rnx::RadarPointCloud cloud = toy_cloud(cfg, 400);
  for (auto _ : state) benchmark::DoNotOptimize(det.forward(cloud));
  state.SetLabel(deploy ? "deploy" : "train");
}
BENCHMARK(BM_Forward)
    ->ArgsProduct({{0, 1}, {1, 3}})
    ->ArgNames({"deploy", "m"})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
