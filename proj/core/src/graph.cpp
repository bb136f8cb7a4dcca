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

#include "rnx/graph.hpp"

#include <algorithm>
#include <cmath>

#include "rnx/error.hpp"
#include "rnx/ops.hpp"

namespace rnx {
namespace {

std::string rep_prefix(std::size_t stage, std::size_t block) {
  return "backbone.stage" + std::to_string(stage) + ".block" + std::to_string(block);
}

std::string dense_prefix(std::size_t stage, std::size_t conv) {
  return "backbone.stage" + std::to_string(stage) + ".conv" + std::to_string(conv);
}

std::string dcn_prefix(int position) { return "neck.dcn" + std::to_string(position); }

void add_bn_specs(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t c) {
  out.push_back({prefix + ".bn.gamma", {c}, ParamRole::kBnGamma});
  out.push_back({prefix + ".bn.beta", {c}, ParamRole::kBnBeta});
  out.push_back({prefix + ".bn.running_mean", {c}, ParamRole::kBnMean});
  out.push_back({prefix + ".bn.running_var", {c}, ParamRole::kBnVar});
}

void add_rep_specs(std::vector<ParamSpec>& out, const LayerSpec& l, std::size_t m, Topology t) {
  const std::size_t cin = l.in_channels, cout = l.out_channels;
  const std::string& p = l.prefix;
  if (t == Topology::kDeploy) {
    out.push_back({p + ".dw.weight", {cin, 1, 3, 3}, ParamRole::kWeight, 9});
    out.push_back({p + ".dw.bias", {cin}, ParamRole::kBias, 9});
    out.push_back({p + ".pw.weight", {cout, cin, 1, 1}, ParamRole::kWeight, cin});
    out.push_back({p + ".pw.bias", {cout}, ParamRole::kBias, cin});
    return;
  }
  out.push_back({p + ".dw_3x3.weight", {cin, 1, 3, 3}, ParamRole::kWeight, 9});
  add_bn_specs(out, p + ".dw_3x3", cin);
  out.push_back({p + ".dw_1x1.weight", {cin, 1, 1, 1}, ParamRole::kWeight, 1});
  add_bn_specs(out, p + ".dw_1x1", cin);
  if (l.stride == 1) add_bn_specs(out, p + ".dw_id", cin);
  for (std::size_t k = 0; k < m; ++k) {
    const std::string br = p + ".pw_" + std::to_string(k);
    out.push_back({br + ".weight", {cout, cin, 1, 1}, ParamRole::kWeight, cin});
    add_bn_specs(out, br, cout);
  }
  if (cin == cout) add_bn_specs(out, p + ".pw_id", cout);
}

void add_conv_bn_specs(std::vector<ParamSpec>& out, const std::string& p, Shape kernel,
                       std::size_t cout, std::size_t fan_in, Topology t) {
  out.push_back({p + ".weight", std::move(kernel), ParamRole::kWeight, fan_in});
  if (t == Topology::kDeploy) {
    out.push_back({p + ".bias", {cout}, ParamRole::kBias, fan_in});
  } else {
    add_bn_specs(out, p, cout);
  }
}

// Transposed-conv kernels are [Cin, Cout, 2, 2]; fold per output channel.
ConvLayer fuse_transposed(const ConvLayer& layer) {
  const auto& bn = *layer.bn;
  const std::size_t cin = layer.kernel.dim(0), cout = layer.kernel.dim(1);
  ConvLayer out = layer;
  out.bn.reset();
  out.bias.assign(cout, 0.0f);
  for (std::size_t oc = 0; oc < cout; ++oc) {
    const double scale = bn.gamma[oc] / std::sqrt(static_cast<double>(bn.running_var[oc]) + bn.eps);
    for (std::size_t ic = 0; ic < cin; ++ic) {
      for (std::size_t t = 0; t < 4; ++t) {
        const std::size_t i = (ic * cout + oc) * 4 + t;
        out.kernel[i] = static_cast<float>(layer.kernel[i] * scale);
      }
    }
    const double b = layer.bias.empty() ? 0.0 : layer.bias[oc];
    out.bias[oc] = static_cast<float>(bn.beta[oc] + (b - bn.running_mean[oc]) * scale);
  }
  return out;
}

ConvLayer load_conv_layer(const WeightStore& store, const LayerSpec& l, Topology t, float eps) {
  ConvLayer layer;
  layer.stride = l.stride;
  const std::string& p = l.prefix;
  switch (l.kind) {
    case LayerKind::kDenseConv:
    case LayerKind::kHeadTrunk:
      layer.kernel = store.require(p + ".weight", {l.out_channels, l.in_channels, 3, 3});
      layer.padding = 1;
      break;
    case LayerKind::kUpsample:
      layer.kernel = store.require(p + ".weight", {l.in_channels, l.out_channels, 2, 2});
      layer.transposed = true;
      break;
    case LayerKind::kHeadBranch:
      layer.kernel = store.require(p + ".weight", {l.out_channels, l.in_channels, 1, 1});
      layer.bias = store.require_vector(p + ".bias", l.out_channels);
      layer.activation = false;
      return layer;
    default:
      throw Error("load_conv_layer: not a convolution layer: " + p);
  }
  if (t == Topology::kDeploy) {
    layer.bias = store.require_vector(p + ".bias", l.out_channels);
  } else {
    layer.bn = load_batch_norm(store, p, l.out_channels, eps);
  }
  return layer;
}

void store_vector(WeightStore& store, const std::string& name, const std::vector<float>& v) {
  store.set(name, Tensor({v.size()}, v));
}

}  // namespace

const char* to_string(NeckKind kind) {
  switch (kind) {
    case NeckKind::kFpn: return "fpn";
    case NeckKind::kPan: return "pan";
    case NeckKind::kMdfen: return "mdfen";
  }
  return "?";
}

const char* to_string(BackboneKind kind) {
  return kind == BackboneKind::kRepDwc ? "repdwc" : "dense";
}

const char* to_string(Topology topology) {
  return topology == Topology::kTrain ? "train" : "deploy";
}

void GraphConfig::validate() const {
  grid.validate();
  schema.validate();
  for (std::size_t i = 0; i < 3; ++i) {
    if (stage_channels[i] == 0) throw ConfigError("stage channels must be positive");
    if (stage_depths[i] == 0) throw ConfigError("stage depths must be positive");
  }
  if (rep_branches == 0) throw ConfigError("rep_branches (m) must be at least 1");
  if (num_classes == 0) throw ConfigError("num_classes must be positive");
  if (head_channels == 0) throw ConfigError("head_channels must be positive");
  if (!(bn_eps > 0.0f)) throw ConfigError("bn_eps must be positive");
  for (int p : dcn_positions) {
    if (p < 1 || p > 5) throw ConfigError("dcn position " + std::to_string(p) + " not in 1..5");
  }
  if (neck != NeckKind::kMdfen && !dcn_positions.empty()) {
    throw ConfigError(std::string("dcn_positions must be empty for the ") + to_string(neck) +
                      " neck");
  }
  if (neck == NeckKind::kMdfen && dcn_positions.empty()) {
    throw ConfigError("the mdfen neck needs at least one dcn position");
  }
  if (neck == NeckKind::kFpn && dcn_positions.count(2)) {
    throw ConfigError("dcn position 2 requires the refinement path");
  }
  const std::size_t c1 = stage_channels[0], c2 = stage_channels[1], c3 = stage_channels[2];
  const std::size_t dcn_channels[6] = {0, c1, c2 + c1, c3, c2 + c1, c1};
  for (int p : dcn_positions) {
    if (dcn_groups == 0 || dcn_channels[p] % dcn_groups != 0) {
      throw ConfigError("dcn position " + std::to_string(p) + " has " +
                        std::to_string(dcn_channels[p]) + " channels, not divisible by " +
                        std::to_string(dcn_groups) + " groups");
    }
  }
}

GraphConfig GraphConfig::vod() { return GraphConfig{}; }

GraphConfig GraphConfig::tj4d() {
  GraphConfig cfg;
  cfg.grid = GridConfig::tj4d();
  cfg.schema = PointSchema::tj4d();
  cfg.num_classes = 4;
  return cfg;
}

std::vector<LayerSpec> graph_layers(const GraphConfig& cfg) {
  cfg.validate();
  const std::size_t c1 = cfg.stage_channels[0], c2 = cfg.stage_channels[1],
                    c3 = cfg.stage_channels[2];
  std::vector<LayerSpec> out;
  out.push_back({LayerKind::kPfn, "pfn", decorated_feature_dim(cfg.schema), cfg.grid.channels});

  std::size_t in = cfg.grid.channels;
  for (std::size_t s = 0; s < 3; ++s) {
    const std::size_t c = cfg.stage_channels[s];
    if (cfg.backbone == BackboneKind::kRepDwc) {
      for (std::size_t j = 0; j < cfg.stage_depths[s]; ++j) {
        out.push_back({LayerKind::kRepDwc, rep_prefix(s, j), j == 0 ? in : c, c, j == 0 ? 2u : 1u});
      }
    } else {
      // Downsampling conv followed by `depth` stride-1 convs.
      for (std::size_t j = 0; j <= cfg.stage_depths[s]; ++j) {
        out.push_back({LayerKind::kDenseConv, dense_prefix(s, j), j == 0 ? in : c, c, j == 0 ? 2u : 1u});
      }
    }
    in = c;
  }

  const auto& pos = cfg.dcn_positions;
  auto dcn = [&](int p, std::size_t channels) {
    if (pos.count(p)) out.push_back({LayerKind::kDcn, dcn_prefix(p), channels, channels});
  };
  dcn(3, c3);
  dcn(1, c1);
  out.push_back({LayerKind::kUpsample, "neck.td.up3", c3, c3});
  out.push_back({LayerKind::kRepDwc, "neck.td.fuse2", c3 + c2, c2});
  out.push_back({LayerKind::kUpsample, "neck.td.up2", c2, c2});
  dcn(4, c2 + c1);
  out.push_back({LayerKind::kRepDwc, "neck.td.fuse1", c2 + c1, c1});
  if (cfg.neck != NeckKind::kFpn) {
    out.push_back({LayerKind::kRepDwc, "neck.bu.down2", c1, c1, 2});
    out.push_back({LayerKind::kRepDwc, "neck.bu.fuse2", c1 + c2, c2});
    out.push_back({LayerKind::kRepDwc, "neck.bu.down3", c2, c2, 2});
    out.push_back({LayerKind::kRepDwc, "neck.bu.fuse3", c2 + c3, c3});
    out.push_back({LayerKind::kUpsample, "neck.out.up3", c3, c3});
    out.push_back({LayerKind::kRepDwc, "neck.out.fuse2", c3 + c2, c2});
    out.push_back({LayerKind::kUpsample, "neck.out.up2", c2, c2});
    dcn(2, c2 + c1);
    out.push_back({LayerKind::kRepDwc, "neck.out.fuse1", c2 + c1, c1});
    dcn(5, c1);
  }

  const std::size_t hc = cfg.head_channels;
  out.push_back({LayerKind::kHeadTrunk, "head.trunk", c1, hc});
  out.push_back({LayerKind::kHeadBranch, "head.cls", hc, cfg.num_classes});
  out.push_back({LayerKind::kHeadBranch, "head.box", hc, kBoxChannels});
  out.push_back({LayerKind::kHeadBranch, "head.iou", hc, 1});
  out.push_back({LayerKind::kHeadBranch, "head.corner", hc, cfg.num_classes});
  return out;
}

std::vector<ParamSpec> parameter_manifest(const GraphConfig& cfg) {
  std::vector<ParamSpec> out;
  const Topology t = cfg.topology;
  for (const LayerSpec& l : graph_layers(cfg)) {
    const std::size_t cin = l.in_channels, cout = l.out_channels;
    switch (l.kind) {
      case LayerKind::kPfn:
        out.push_back({"pfn.linear.weight", {cout, cin}, ParamRole::kWeight, cin});
        if (t == Topology::kDeploy) {
          out.push_back({"pfn.linear.bias", {cout}, ParamRole::kBias, cin});
        } else {
          add_bn_specs(out, "pfn", cout);
        }
        break;
      case LayerKind::kRepDwc:
        add_rep_specs(out, l, cfg.rep_branches, t);
        break;
      case LayerKind::kDenseConv:
      case LayerKind::kHeadTrunk:
        add_conv_bn_specs(out, l.prefix, {cout, cin, 3, 3}, cout, cin * 9, t);
        break;
      case LayerKind::kUpsample:
        add_conv_bn_specs(out, l.prefix, {cin, cout, 2, 2}, cout, cin, t);
        break;
      case LayerKind::kHeadBranch:
        out.push_back({l.prefix + ".weight", {cout, cin, 1, 1}, ParamRole::kWeight, cin});
        out.push_back({l.prefix + ".bias", {cout}, ParamRole::kBias, cin});
        break;
      case LayerKind::kDcn: {
        const std::size_t nk = cfg.dcn_groups * cfg.dcn_points;
        const std::string& p = l.prefix;
        out.push_back({p + ".input_proj.weight", {cin, cin, 1, 1}, ParamRole::kWeight, cin});
        out.push_back({p + ".input_proj.bias", {cin}, ParamRole::kBias, cin});
        out.push_back({p + ".output_proj.weight", {cin, cin, 1, 1}, ParamRole::kWeight, cin});
        out.push_back({p + ".output_proj.bias", {cin}, ParamRole::kBias, cin});
        out.push_back({p + ".offset.weight", {2 * nk, cin, 3, 3}, ParamRole::kWeight, cin * 9});
        out.push_back({p + ".offset.bias", {2 * nk}, ParamRole::kBias, cin * 9});
        out.push_back({p + ".modulation.weight", {nk, cin, 3, 3}, ParamRole::kWeight, cin * 9});
        out.push_back({p + ".modulation.bias", {nk}, ParamRole::kBias, cin * 9});
        break;
      }
    }
  }
  return out;
}

std::size_t count_parameters(const GraphConfig& cfg) {
  std::size_t n = 0;
  for (const ParamSpec& p : parameter_manifest(cfg)) n += shape_numel(p.shape);
  return n;
}

std::size_t count_parameters(const WeightStore& weights, const GraphConfig& cfg) {
  std::size_t n = 0;
  for (const ParamSpec& p : parameter_manifest(cfg)) n += weights.require(p.name, p.shape).numel();
  return n;
}

WeightStore reparameterize_weights(const WeightStore& train, const GraphConfig& cfg) {
  GraphConfig train_cfg = cfg;
  train_cfg.topology = Topology::kTrain;
  const float eps = cfg.bn_eps;
  WeightStore out;
  for (const LayerSpec& l : graph_layers(train_cfg)) {
    switch (l.kind) {
      case LayerKind::kPfn: {
        const PfnParams fused =
            PfnParams::from_store(train, l.in_channels, l.out_channels, eps).fused();
        out.set("pfn.linear.weight", fused.weight);
        store_vector(out, "pfn.linear.bias", fused.bias);
        break;
      }
      case LayerKind::kRepDwc: {
        const RepDwcLayout layout{l.prefix, l.in_channels, l.out_channels, l.stride,
                                  cfg.rep_branches};
        store_rep_dwc_deploy(out, l.prefix,
                             reparameterize_block(load_rep_dwc_train(train, layout, eps)));
        break;
      }
      case LayerKind::kDenseConv:
      case LayerKind::kHeadTrunk:
      case LayerKind::kUpsample:
      case LayerKind::kHeadBranch: {
        const ConvLayer fused = load_conv_layer(train, l, Topology::kTrain, eps).fused();
        out.set(l.prefix + ".weight", fused.kernel);
        store_vector(out, l.prefix + ".bias", fused.bias);
        break;
      }
      case LayerKind::kDcn:
        for (const char* part : {"input_proj", "output_proj", "offset", "modulation"}) {
          for (const char* kind : {"weight", "bias"}) {
            const std::string name = l.prefix + "." + part + "." + kind;
            out.set(name, train.at(name));
          }
        }
        break;
    }
  }
  return out;
}

Tensor ConvLayer::forward(const Tensor& x) const {
  Tensor y = transposed ? transpose_conv2d(x, kernel, bn ? std::span<const float>{} : bias)
                        : conv2d(x, kernel, bn ? std::span<const float>{} : bias,
                                 {.stride = stride, .padding = padding});
  if (bn) {
    if (!bias.empty()) throw Error("conv layer carries both bias and batch norm");
    y = batch_norm_inference(y, *bn);
  }
  return activation ? relu(std::move(y)) : y;
}

ConvLayer ConvLayer::fused() const {
  if (!bn) return *this;
  if (transposed) return fuse_transposed(*this);
  ConvLayer out = *this;
  std::tie(out.kernel, out.bias) = fuse_conv_bn(kernel, bias, *bn);
  out.bn.reset();
  return out;
}

std::size_t ConvLayer::parameter_count() const {
  return kernel.numel() + bias.size() + (bn ? 4 * bn->channels() : 0);
}

Detector::Detector(GraphConfig cfg, const WeightStore& weights) : cfg_(std::move(cfg)) {
  const Topology t = cfg_.topology;
  const float eps = cfg_.bn_eps;
  for (const LayerSpec& l : graph_layers(cfg_)) {
    switch (l.kind) {
      case LayerKind::kPfn:
        if (t == Topology::kTrain && !weights.contains("pfn.bn.gamma")) {
          throw WeightError("missing weight entry 'pfn.bn.gamma'");
        }
        if (t == Topology::kDeploy && !weights.contains("pfn.linear.bias")) {
          throw WeightError("missing weight entry 'pfn.linear.bias'");
        }
        layers_.emplace(l.prefix, PfnParams::from_store(weights, l.in_channels, l.out_channels, eps));
        break;
      case LayerKind::kRepDwc: {
        const RepDwcLayout layout{l.prefix, l.in_channels, l.out_channels, l.stride,
                                  cfg_.rep_branches};
        if (t == Topology::kTrain) {
          layers_.emplace(l.prefix, RepDwcParams(load_rep_dwc_train(weights, layout, eps)));
        } else {
          layers_.emplace(l.prefix, RepDwcParams(load_rep_dwc_deploy(weights, layout)));
        }
        break;
      }
      case LayerKind::kDenseConv:
      case LayerKind::kHeadTrunk:
      case LayerKind::kUpsample:
      case LayerKind::kHeadBranch:
        layers_.emplace(l.prefix, load_conv_layer(weights, l, t, eps));
        break;
      case LayerKind::kDcn:
        layers_.emplace(l.prefix, load_dcnv3(weights, l.prefix, l.in_channels, cfg_.dcn_groups,
                                             cfg_.dcn_points));
        break;
    }
  }
}

const Detector::Layer& Detector::layer(const std::string& prefix) const {
  const auto it = layers_.find(prefix);
  if (it == layers_.end()) throw Error("graph has no layer '" + prefix + "'");
  return it->second;
}

Tensor Detector::run(const std::string& prefix, const Tensor& x) const {
  return std::visit(
      [&](const auto& l) -> Tensor {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, RepDwcParams>) {
          return rep_dwc_block_forward(x, l);
        } else if constexpr (std::is_same_v<T, ConvLayer>) {
          return l.forward(x);
        } else if constexpr (std::is_same_v<T, DcnV3Params>) {
          return dcnv3_forward(x, l);
        } else {
          throw Error("layer '" + prefix + "' is not a feature-map layer");
        }
      },
      layer(prefix));
}

Tensor Detector::maybe_dcn(int position, const Tensor& x) const {
  if (!cfg_.dcn_positions.count(position)) return x;
  return run(dcn_prefix(position), x);
}

Tensor Detector::encode(const RadarPointCloud& cloud) const {
  const PillarSet pillars = pillarize(cloud, cfg_.grid);
  const auto& pfn = std::get<PfnParams>(layer("pfn"));
  return scatter_to_bev(pfn_forward(pillars, pfn), pillars, cfg_.grid);
}

BackboneOutput Detector::backbone_forward(const Tensor& bev) const {
  if (bev.rank() != 3 || bev.dim(0) != cfg_.grid.channels) {
    throw ShapeError("backbone: input " + shape_to_string(bev.shape()) + " does not have " +
                     std::to_string(cfg_.grid.channels) + " channels");
  }
  if (bev.dim(1) % 8 != 0 || bev.dim(2) % 8 != 0) {
    throw ShapeError("backbone: spatial extents " + std::to_string(bev.dim(1)) + "x" +
                     std::to_string(bev.dim(2)) + " are not divisible by 8");
  }
  std::array<Tensor, 3> stages;
  Tensor x = bev;
  for (std::size_t s = 0; s < 3; ++s) {
    if (cfg_.backbone == BackboneKind::kRepDwc) {
      for (std::size_t j = 0; j < cfg_.stage_depths[s]; ++j) x = run(rep_prefix(s, j), x);
    } else {
      for (std::size_t j = 0; j <= cfg_.stage_depths[s]; ++j) x = run(dense_prefix(s, j), x);
    }
    stages[s] = x;
  }
  return {std::move(stages[0]), std::move(stages[1]), std::move(stages[2])};
}

Tensor Detector::neck_forward(const BackboneOutput& pyramid) const {
  auto cat = [](const Tensor& a, const Tensor& b) {
    const Tensor parts[] = {a, b};
    return concat_channels(parts);
  };
  const Tensor s3 = maybe_dcn(3, pyramid.s3);
  const Tensor s1 = maybe_dcn(1, pyramid.s1);
  const Tensor t2 = run("neck.td.fuse2", cat(run("neck.td.up3", s3), pyramid.s2));
  const Tensor t1 = run("neck.td.fuse1", maybe_dcn(4, cat(run("neck.td.up2", t2), s1)));
  if (cfg_.neck == NeckKind::kFpn) return t1;

  const Tensor b2 = run("neck.bu.fuse2", cat(run("neck.bu.down2", t1), t2));
  const Tensor b3 = run("neck.bu.fuse3", cat(run("neck.bu.down3", b2), s3));
  const Tensor r2 = run("neck.out.fuse2", cat(run("neck.out.up3", b3), b2));
  const Tensor r1 = run("neck.out.fuse1", maybe_dcn(2, cat(run("neck.out.up2", r2), t1)));
  return maybe_dcn(5, r1);
}

HeadOutput Detector::head_forward(const Tensor& feature) const {
  const Tensor trunk = run("head.trunk", feature);
  HeadOutput out;
  out.class_heatmaps = sigmoid(run("head.cls", trunk));
  out.box_regression = run("head.box", trunk);
  out.iou_prediction = sigmoid(run("head.iou", trunk));
  out.corner_heatmaps = sigmoid(run("head.corner", trunk));
  return out;
}

HeadOutput Detector::forward(const RadarPointCloud& cloud) const {
  return head_forward(neck_forward(backbone_forward(encode(cloud))));
}

std::size_t Detector::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, l] : layers_) {
    n += std::visit(
        [](const auto& v) -> std::size_t {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, RepDwcParams>) {
            return count_block_params(v);
          } else {
            return v.parameter_count();
          }
        },
        l);
  }
  return n;
}

BackboneOutput backbone_forward(const Tensor& bev, const WeightStore& weights,
                                const GraphConfig& cfg) {
  return Detector(cfg, weights).backbone_forward(bev);
}

Tensor neck_forward(const BackboneOutput& pyramid, const WeightStore& weights,
                    const GraphConfig& cfg) {
  return Detector(cfg, weights).neck_forward(pyramid);
}

HeadOutput head_forward(const Tensor& feature, const WeightStore& weights, const GraphConfig& cfg) {
  return Detector(cfg, weights).head_forward(feature);
}

HeadOutput full_forward(const RadarPointCloud& cloud, const WeightStore& weights,
                        const GraphConfig& cfg) {
  return Detector(cfg, weights).forward(cloud);
}

float max_abs_diff(const HeadOutput& a, const HeadOutput& b) {
  return std::max({max_abs_diff(a.class_heatmaps, b.class_heatmaps),
                   max_abs_diff(a.box_regression, b.box_regression),
                   max_abs_diff(a.iou_prediction, b.iou_prediction),
                   max_abs_diff(a.corner_heatmaps, b.corner_heatmaps)});
}

}  // namespace rnx
