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

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "rnx/dcn.hpp"
#include "rnx/head_output.hpp"
#include "rnx/pillar.hpp"
#include "rnx/repdwc.hpp"
#include "rnx/weight_store.hpp"

namespace rnx {

/// FPN: one top-down pass ending at stride 2. PAN: top-down, bottom-up, then
/// a second top-down refinement. MDFEN: the PAN wiring plus deformable layers
/// at `dcn_positions`.
enum class NeckKind { kFpn, kPan, kMdfen };
enum class BackboneKind { kRepDwc, kDense };
enum class Topology { kTrain, kDeploy };

const char* to_string(NeckKind kind);
const char* to_string(BackboneKind kind);
const char* to_string(Topology topology);

/// Full architecture description.
///
/// Neck wiring, with S1, S2, S3 the backbone outputs at strides 2, 4, 8:
///
///   top-down:   T2 = fuse(cat(up(S3), S2));  T1 = fuse(cat(up(T2), S1))
///   bottom-up:  B2 = fuse(cat(down(T1), T2)); B3 = fuse(cat(down(B2), S3))
///   refinement: R2 = fuse(cat(up(B3), B2));  R1 = fuse(cat(up(R2), T1))
///
/// FPN outputs T1. PAN and MDFEN both run all three paths and output R1; the
/// refinement path is the top-down pass that brings the bottom-up pyramid back
/// to stride 2. MDFEN adds DCNv3 at the configured positions:
///   1: on S1 before the top-down path
///   2: on cat(up(R2), T1), before the last refinement fusion
///   3: on S3 before the top-down path
///   4: on cat(up(T2), S1), before the fusion that feeds the bottom-up path
///   5: on R1
/// Every "up" is a 2x2 stride-2 transposed convolution that keeps the channel
/// count, every "down" a stride-2 Rep-DWC block, every "fuse" one Rep-DWC block.
struct GraphConfig {
  GridConfig grid;
  PointSchema schema = PointSchema::vod();
  std::array<std::size_t, 3> stage_channels{64, 128, 256};
  std::array<std::size_t, 3> stage_depths{3, 5, 5};
  std::size_t rep_branches = 1;  // m, pointwise branch multiplicity
  BackboneKind backbone = BackboneKind::kRepDwc;
  NeckKind neck = NeckKind::kMdfen;
  /// Deformable layer sites, MDFEN only (at least one). Channel counts are
  /// for the default stage widths.
  ///   1  backbone stride-2 output, 64 channels
  ///   2  input of the refinement stride-2 fusion, 192 channels
  ///   3  backbone stride-8 output, 256 channels
  ///   4  input of the top-down stride-2 fusion, 192 channels
  ///   5  neck output, 64 channels
  std::set<int> dcn_positions{4};
  std::size_t dcn_groups = 4;
  std::size_t dcn_points = 9;
  std::size_t num_classes = 3;
  std::size_t head_channels = 64;
  float bn_eps = 1e-3f;
  Topology topology = Topology::kTrain;

  void validate() const;

  static GraphConfig vod();
  static GraphConfig tj4d();
};

enum class LayerKind { kPfn, kRepDwc, kDenseConv, kUpsample, kDcn, kHeadTrunk, kHeadBranch };

/// One parameterized layer of the graph.
struct LayerSpec {
  LayerKind kind;
  std::string prefix;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t stride = 1;
};

std::vector<LayerSpec> graph_layers(const GraphConfig& cfg);

enum class ParamRole { kWeight, kBias, kBnGamma, kBnBeta, kBnMean, kBnVar };

struct ParamSpec {
  std::string name;
  Shape shape;
  ParamRole role;
  std::size_t fan_in = 1;
};

/// Every weight entry the graph consumes in the configured topology.
std::vector<ParamSpec> parameter_manifest(const GraphConfig& cfg);

/// Scalar parameter count of the configured topology.
std::size_t count_parameters(const GraphConfig& cfg);
/// Scalar parameter count of `weights`, which must hold every manifest entry.
std::size_t count_parameters(const WeightStore& weights, const GraphConfig& cfg);

/// Folds every batch norm and sums every Rep-DWC branch of a train-topology
/// store. `cfg.topology` is ignored.
WeightStore reparameterize_weights(const WeightStore& train, const GraphConfig& cfg);

/// Convolution (or 2x2 transposed convolution) with optional batch norm and
/// ReLU.
struct ConvLayer {
  Tensor kernel;
  std::vector<float> bias;
  std::optional<BatchNormParams> bn;
  std::size_t stride = 1;
  std::size_t padding = 0;
  bool transposed = false;
  bool activation = true;

  Tensor forward(const Tensor& x) const;
  /// Same layer with the batch norm folded into kernel and bias.
  ConvLayer fused() const;
  std::size_t parameter_count() const;
};

struct BackboneOutput {
  Tensor s1;  // stride 2
  Tensor s2;  // stride 4
  Tensor s3;  // stride 8
};

/// A graph bound to validated weights. Forward passes are pure.
class Detector {
 public:
  Detector(GraphConfig cfg, const WeightStore& weights);

  const GraphConfig& config() const { return cfg_; }

  Tensor encode(const RadarPointCloud& cloud) const;
  BackboneOutput backbone_forward(const Tensor& bev) const;
  Tensor neck_forward(const BackboneOutput& pyramid) const;
  HeadOutput head_forward(const Tensor& feature) const;
  HeadOutput forward(const RadarPointCloud& cloud) const;

  std::size_t parameter_count() const;

 private:
  using Layer = std::variant<PfnParams, RepDwcParams, ConvLayer, DcnV3Params>;

  const Layer& layer(const std::string& prefix) const;
  Tensor run(const std::string& prefix, const Tensor& x) const;
  Tensor maybe_dcn(int position, const Tensor& x) const;

  GraphConfig cfg_;
  std::map<std::string, Layer> layers_;
};

BackboneOutput backbone_forward(const Tensor& bev, const WeightStore& weights,
                                const GraphConfig& cfg);
Tensor neck_forward(const BackboneOutput& pyramid, const WeightStore& weights,
                    const GraphConfig& cfg);
HeadOutput head_forward(const Tensor& feature, const WeightStore& weights,
                        const GraphConfig& cfg);
HeadOutput full_forward(const RadarPointCloud& cloud, const WeightStore& weights,
                        const GraphConfig& cfg);

/// Largest elementwise difference over all four head maps.
float max_abs_diff(const HeadOutput& a, const HeadOutput& b);

}  // namespace rnx
