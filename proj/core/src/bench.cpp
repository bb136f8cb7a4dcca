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

#include "rnx/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <fmt/format.h>

#include "rnx/error.hpp"

namespace rnx {
namespace {

std::string environment_note() {
#if defined(__clang__)
  const std::string compiler = fmt::format("clang-{}.{}", __clang_major__, __clang_minor__);
#elif defined(__GNUC__)
  const std::string compiler = fmt::format("gcc-{}.{}", __GNUC__, __GNUC_MINOR__);
#else
  const std::string compiler = "unknown-compiler";
#endif
#ifdef NDEBUG
  const char* build = "release";
#else
  const char* build = "debug";
#endif
  return fmt::format("{}/{}/threads=1", compiler, build);
}

}  // namespace

double median(std::vector<double> samples) {
  if (samples.empty()) throw Error("median of an empty sample");
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  return n % 2 == 1 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
}

double percentile95(std::vector<double> samples) {
  if (samples.empty()) throw Error("percentile of an empty sample");
  std::sort(samples.begin(), samples.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(samples.size())));
  return samples[std::max<std::size_t>(rank, 1) - 1];
}

std::string BenchmarkReport::to_line() const {
  return fmt::format("topology={} runs={} median_ms={:.3f} p95_ms={:.3f} fps={:.2f} mode=serial env={}",
                     to_string(topology), runs(), median_ms, p95_ms, fps, environment);
}

BenchmarkReport run_benchmark(const GraphConfig& cfg, const WeightStore& weights,
                              const std::vector<RadarPointCloud>& clouds, std::size_t warmup,
                              std::size_t iters) {
  if (iters < 1) throw Error("benchmark needs at least one timed run");
  if (clouds.empty()) throw Error("benchmark needs at least one input cloud");
  const Detector detector(cfg, weights);

  for (std::size_t i = 0; i < warmup; ++i) (void)detector.forward(clouds[i % clouds.size()]);

  BenchmarkReport report;
  report.topology = cfg.topology;
  report.environment = environment_note();
  report.latencies_ms.reserve(iters);
  for (std::size_t i = 0; i < iters; ++i) {
    const RadarPointCloud& cloud = clouds[i % clouds.size()];
    const auto start = std::chrono::steady_clock::now();
    const HeadOutput out = detector.forward(cloud);
    const auto stop = std::chrono::steady_clock::now();
    (void)out;
    report.latencies_ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
  }
  report.median_ms = median(report.latencies_ms);
  report.p95_ms = percentile95(report.latencies_ms);
  report.fps = 1000.0 / std::max(report.median_ms, 1e-9);
  return report;
}

}  // namespace rnx
