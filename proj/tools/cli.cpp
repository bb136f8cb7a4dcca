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


#include "cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "rnx/bench.hpp"
#include "rnx/config.hpp"
#include "rnx/error.hpp"
#include "rnx/init.hpp"
#include "rnx/io.hpp"
#include "rnx/metrics.hpp"
#include "rnx/pipeline.hpp"

namespace rnx::cli {
namespace {

namespace fs = std::filesystem;

// Regular files under `dir` with the given extension, sorted by name.
std::vector<fs::path> files_with_extension(const fs::path& dir, const std::string& ext) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// A single file, or every `.bin` file of a directory.
std::vector<fs::path> input_clouds(const fs::path& input) {
  if (!fs::exists(input)) throw Error("input '" + input.string() + "' does not exist");
  if (!fs::is_directory(input)) return {input};
  auto files = files_with_extension(input, ".bin");
  if (files.empty()) throw Error("no .bin files in '" + input.string() + "'");
  return files;
}

GraphConfig graph_for(const DetectorConfig& cfg, bool deploy, bool dense = false) {
  GraphConfig g = cfg.graph;
  g.topology = deploy ? Topology::kDeploy : Topology::kTrain;
  if (dense) g.backbone = BackboneKind::kDense;
  return g;
}

struct InferArgs {
  std::string config, weights, input, output;
  bool deploy = false;
};

int infer(const InferArgs& a, std::ostream& out) {
  const DetectorConfig cfg = load_config(a.config);
  const GraphConfig graph = graph_for(cfg, a.deploy);
  const Detector detector(graph, load_weights(a.weights));
  const auto inputs = input_clouds(a.input);
  const bool to_dir = fs::is_directory(a.input);
  if (to_dir) fs::create_directories(a.output);
  std::size_t total = 0;
  for (const auto& path : inputs) {
    const auto dets = detect(detector, load_point_cloud(path, graph.schema), cfg.runtime);
    const fs::path dest = to_dir ? fs::path(a.output) / path.filename().replace_extension(".txt")
                                 : fs::path(a.output);
    save_detections(dest, dets, cfg.runtime.class_names);
    total += dets.size();
  }
  out << fmt::format("frames={} detections={} topology={}\n", inputs.size(), total,
                     to_string(graph.topology));
  return 0;
}

struct ReparamArgs {
  std::string config, weights_in, weights_out;
};

int reparam(const ReparamArgs& a, std::ostream& out) {
  const DetectorConfig cfg = load_config(a.config);
  const GraphConfig graph = graph_for(cfg, false);
  const WeightStore deployed = reparameterize_weights(load_weights(a.weights_in), graph);
  save_weights(a.weights_out, deployed);
  out << fmt::format("entries={} parameters={}\n", deployed.size(), deployed.scalar_count());
  return 0;
}

struct BenchArgs {
  std::string config, weights, input;
  std::size_t warmup = 5;
  std::size_t iters = 50;
  bool deploy = false;
};

int bench(const BenchArgs& a, std::ostream& out) {
  const DetectorConfig cfg = load_config(a.config);
  const GraphConfig graph = graph_for(cfg, a.deploy);
  std::vector<RadarPointCloud> clouds;
  for (const auto& path : input_clouds(a.input)) clouds.push_back(load_point_cloud(path, graph.schema));
  const BenchmarkReport report = run_benchmark(graph, load_weights(a.weights), clouds, a.warmup, a.iters);
  out << report.to_line() << "\n";
  return 0;
}

struct EvalArgs {
  std::string dets, gts, config;
};

int eval(const EvalArgs& a, std::ostream& out) {
  const DetectorConfig cfg = load_config(a.config);
  const auto& names = cfg.runtime.class_names;
  std::vector<std::vector<Detection>> dets;
  std::vector<GroundTruthSet> gts;
  for (const auto& label : files_with_extension(a.gts, ".txt")) {
    gts.push_back(load_labels(label, names));
    const fs::path det = fs::path(a.dets) / label.filename();
    dets.push_back(fs::exists(det) ? load_detections(det, names) : std::vector<Detection>{});
  }
  if (gts.empty()) throw Error("no .txt label files in '" + a.gts + "'");

  std::vector<std::optional<double>> ap3d, apbev;
  for (std::size_t c = 0; c < names.size(); ++c) {
    const double thr = cfg.runtime.iou_thresholds[c];
    ap3d.push_back(evaluate_ap(dets, gts, c, thr, IouMode::k3d));
    apbev.push_back(evaluate_ap(dets, gts, c, thr, IouMode::kBev));
  }
  const auto show = [](const std::optional<double>& v) {
    return v ? fmt::format("{:.4f}", *v * 100.0) : std::string("n/a");
  };
  out << fmt::format("frames={}\n", gts.size());
  for (std::size_t c = 0; c < names.size(); ++c) {
    out << fmt::format("class={} iou={} ap3d={} apbev={}\n", names[c], cfg.runtime.iou_thresholds[c],
                       show(ap3d[c]), show(apbev[c]));
  }
  out << fmt::format("map3d={} mapbev={}\n", show(evaluate_map(ap3d)), show(evaluate_map(apbev)));
  return 0;
}

struct CountArgs {
  std::string config;
  bool deploy = false;
  bool dense = false;
};

int param_count(const CountArgs& a, std::ostream& out) {
  const DetectorConfig cfg = load_config(a.config);
  out << count_parameters(graph_for(cfg, a.deploy, a.dense)) << "\n";
  return 0;
}

struct ManifestArgs {
  std::string config;
  bool deploy = false;
  bool dense = false;
};

// Name and shape of every entry, for converting externally trained weights.
int manifest(const ManifestArgs& a, std::ostream& out) {
  const DetectorConfig cfg = load_config(a.config);
  for (const ParamSpec& p : parameter_manifest(graph_for(cfg, a.deploy, a.dense))) {
    out << p.name << " " << shape_to_string(p.shape) << "\n";
  }
  return 0;
}

struct InitArgs {
  std::string config, out;
  std::uint64_t seed = 0;
  bool dense = false;
};

int init_weights(const InitArgs& a, std::ostream& out) {
  const DetectorConfig cfg = load_config(a.config);
  const WeightStore w = init_random_weights(graph_for(cfg, false, a.dense), a.seed);
  save_weights(a.out, w);
  out << fmt::format("entries={} parameters={}\n", w.size(), w.scalar_count());
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Radar pillar detector: inference, reparameterization, benchmarking and evaluation",
               "rnx"};
  app.require_subcommand(1);

  InferArgs infer_args;
  auto* infer_cmd = app.add_subcommand("infer", "Detect objects in point cloud files");
  infer_cmd->add_option("--config", infer_args.config, "Configuration file")->required();
  infer_cmd->add_option("--weights", infer_args.weights, "Weight file")->required();
  infer_cmd->add_option("--input", infer_args.input, "Point cloud file or directory of .bin files")
      ->required();
  infer_cmd->add_option("--output", infer_args.output, "Detection file, or directory for directory input")
      ->required();
  infer_cmd->add_flag("--deploy", infer_args.deploy, "Weights are in the fused deploy layout");

  ReparamArgs reparam_args;
  auto* reparam_cmd = app.add_subcommand("reparam", "Fuse training weights into the deploy layout");
  reparam_cmd->add_option("--config", reparam_args.config, "Configuration file")->required();
  reparam_cmd->add_option("--weights-in", reparam_args.weights_in, "Training weights")->required();
  reparam_cmd->add_option("--weights-out", reparam_args.weights_out, "Deploy weights")->required();

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Time forward passes");
  bench_cmd->add_option("--config", bench_args.config, "Configuration file")->required();
  bench_cmd->add_option("--weights", bench_args.weights, "Weight file")->required();
  bench_cmd->add_option("--input", bench_args.input, "Point cloud file or directory")->required();
  bench_cmd->add_option("--warmup", bench_args.warmup, "Untimed runs")->capture_default_str();
  bench_cmd->add_option("--iters", bench_args.iters, "Timed runs")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  bench_cmd->add_flag("--deploy", bench_args.deploy, "Weights are in the fused deploy layout");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Average precision of detections against labels");
  eval_cmd->add_option("--dets", eval_args.dets, "Directory of detection files")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--gts", eval_args.gts, "Directory of label files")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--config", eval_args.config, "Configuration file")->required();

  CountArgs count_args;
  auto* count_cmd = app.add_subcommand("param-count", "Print the number of learnable parameters");
  count_cmd->add_option("--config", count_args.config, "Configuration file")->required();
  count_cmd->add_flag("--deploy", count_args.deploy, "Count the fused deploy layout");
  count_cmd->add_flag("--dense", count_args.dense, "Use the dense 3x3 backbone");

  ManifestArgs manifest_args;
  auto* manifest_cmd = app.add_subcommand("manifest", "List weight entry names and shapes");
  manifest_cmd->add_option("--config", manifest_args.config, "Configuration file")->required();
  manifest_cmd->add_flag("--deploy", manifest_args.deploy, "List the fused deploy layout");
  manifest_cmd->add_flag("--dense", manifest_args.dense, "Use the dense 3x3 backbone");

  InitArgs init_args;
  auto* init_cmd = app.add_subcommand("init-weights", "Write seeded random training weights");
  init_cmd->add_option("--config", init_args.config, "Configuration file")->required();
  init_cmd->add_option("--seed", init_args.seed, "Random seed")->capture_default_str();
  init_cmd->add_option("--out", init_args.out, "Output weight file")->required();
  init_cmd->add_flag("--dense", init_args.dense, "Use the dense 3x3 backbone");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
  }

  try {
    if (*infer_cmd) return infer(infer_args, out);
    if (*reparam_cmd) return reparam(reparam_args, out);
    if (*bench_cmd) return bench(bench_args, out);
    if (*eval_cmd) return eval(eval_args, out);
    if (*count_cmd) return param_count(count_args, out);
    if (*manifest_cmd) return manifest(manifest_args, out);
    if (*init_cmd) return init_weights(init_args, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 2;
}

int run(int argc, const char* const* argv) { return run(argc, argv, std::cout, std::cerr); }

}  // namespace rnx::cli
