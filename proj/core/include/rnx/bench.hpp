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

#pragma once

#include <string>
#include <vector>

#include "rnx/graph.hpp"
#include "rnx/pillar.hpp"
#include "rnx/weight_store.hpp"

namespace rnx {

struct BenchmarkReport {
  std::vector<double> latencies_ms;  // timed runs only, in run order
  double median_ms = 0.0;
  double p95_ms = 0.0;
  double fps = 0.0;  // 1000 / median_ms
  Topology topology = Topology::kTrain;
  std::string environment;

  std::size_t runs() const { return latencies_ms.size(); }
  /// `topology=deploy runs=50 median_ms=... p95_ms=... fps=... mode=serial env=...`
  std::string to_line() const;
};

/// Median of the samples; the mean of the two middle values for even counts.
double median(std::vector<double> samples);
/// Nearest-rank 95th percentile.
double percentile95(std::vector<double> samples);

/// Builds the detector once, then runs `warmup` untimed and `iters` timed full
/// forwards, cycling through `clouds`. Only the forward call is inside the
/// steady_clock window.
BenchmarkReport run_benchmark(const GraphConfig& cfg, const WeightStore& weights,
                              const std::vector<RadarPointCloud>& clouds, std::size_t warmup,
                              std::size_t iters);

}  // namespace rnx
