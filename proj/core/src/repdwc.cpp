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

#include "rnx/repdwc.hpp"

#include <cmath>

#include "rnx/error.hpp"

namespace rnx {
namespace {

void require_bn_channels(const BatchNormParams& bn, std::size_t channels, const char* where) {
  bn.validate();
  if (bn.channels() != channels) {
    throw ShapeError(std::string(where) + ": batch norm has " +
                     std::to_string(bn.channels()) + " channels, expected " +
                     std::to_string(channels));
  }
}

// Accumulates fused (kernel, bias) pairs in double before the final cast.
struct KernelSum {
  std::vector<double> kernel;
  std::vector<double> bias;

  void add(const Tensor& k, const std::vector<float>& b) {
    if (kernel.empty()) {
      kernel.assign(k.numel(), 0.0);
      bias.assign(b.size(), 0.0);
    }
    for (std::size_t i = 0; i < k.numel(); ++i) kernel[i] += k[i];
    for (std::size_t i = 0; i < b.size(); ++i) bias[i] += b[i];
  }

  std::pair<Tensor, std::vector<float>> finish(const Shape& shape) const {
    std::vector<float> k(kernel.begin(), kernel.end());
    std::vector<float> b(bias.begin(), bias.end());
    if (k.empty()) k.assign(shape_numel(shape), 0.0f);
    if (b.empty()) b.assign(shape[0], 0.0f);
    return {Tensor(shape, std::move(k)), std::move(b)};
  }
};

std::size_t dw_padding(const Tensor& kernel) { return kernel.dim(2) / 2; }

}  // namespace

std::size_t RepDwcTrainParams::in_channels() const {
  if (!dw_branches.empty()) return dw_branches.front().kernel.dim(0);
  if (dw_identity) return dw_identity->channels();
  if (!pw_branches.empty()) return pw_branches.front().kernel.dim(1);
  return 0;
}

std::size_t RepDwcTrainParams::out_channels() const {
  if (!pw_branches.empty()) return pw_branches.front().kernel.dim(0);
  if (pw_identity) return pw_identity->channels();
  return 0;
}

void RepDwcTrainParams::validate() const {
  if (stride != 1 && stride != 2) throw ShapeError("rep-dwc stride must be 1 or 2");
  if (stride == 2 && dw_identity) {
    throw ShapeError("rep-dwc: stride-2 block cannot carry an identity branch");
  }
  const std::size_t cin = in_channels();
  const std::size_t cout = out_channels();
  for (const auto& br : dw_branches) {
    const auto& s = br.kernel.shape();
    if (s.size() != 4 || s[0] != cin || s[1] != 1 || s[2] != s[3] || (s[2] != 1 && s[2] != 3)) {
      throw ShapeError("rep-dwc: depthwise branch kernel " + shape_to_string(s) +
                       " is not [" + std::to_string(cin) + ", 1, k, k] with k in {1, 3}");
    }
    require_bn_channels(br.bn, cin, "rep-dwc depthwise branch");
  }
  if (dw_identity) require_bn_channels(*dw_identity, cin, "rep-dwc depthwise identity");
  for (const auto& br : pw_branches) {
    const auto& s = br.kernel.shape();
    if (s.size() != 4 || s[0] != cout || s[1] != cin || s[2] != 1 || s[3] != 1) {
      throw ShapeError("rep-dwc: pointwise branch kernel " + shape_to_string(s) +
                       " is not [" + std::to_string(cout) + ", " + std::to_string(cin) +
                       ", 1, 1]");
    }
    require_bn_channels(br.bn, cout, "rep-dwc pointwise branch");
  }
  if (pw_identity) {
    if (cin != cout) throw ShapeError("rep-dwc: pointwise identity needs Cin == Cout");
    require_bn_channels(*pw_identity, cout, "rep-dwc pointwise identity");
  }
}

void RepDwcDeployParams::validate() const {
  const auto& d = dw_kernel.shape();
  if (d.size() != 4 || d[1] != 1 || d[2] != 3 || d[3] != 3) {
    throw ShapeError("rep-dwc deploy: depthwise kernel " + shape_to_string(d) +
                     " is not [C, 1, 3, 3]");
  }
  const auto& p = pw_kernel.shape();
  if (p.size() != 4 || p[1] != d[0] || p[2] != 1 || p[3] != 1) {
    throw ShapeError("rep-dwc deploy: pointwise kernel " + shape_to_string(p) +
                     " does not consume " + std::to_string(d[0]) + " channels");
  }
  if (dw_bias.size() != d[0] || pw_bias.size() != p[0]) {
    throw ShapeError("rep-dwc deploy: bias lengths do not match kernels");
  }
  if (stride != 1 && stride != 2) throw ShapeError("rep-dwc stride must be 1 or 2");
}

std::pair<Tensor, std::vector<float>> fuse_conv_bn(const Tensor& kernel,
                                                   std::span<const float> bias,
                                                   const BatchNormParams& bn) {
  if (kernel.rank() == 0) throw ShapeError("fuse_conv_bn: empty kernel");
  const std::size_t cout = kernel.dim(0);
  if (bn.channels() != cout) {
    throw ShapeError("fuse_conv_bn: batch norm has " + std::to_string(bn.channels()) +
                     " channels, kernel has " + std::to_string(cout) + " outputs");
  }
  if (!bias.empty() && bias.size() != cout) {
    throw ShapeError("fuse_conv_bn: bias length " + std::to_string(bias.size()) +
                     " != " + std::to_string(cout));
  }
  bn.validate();
  const std::size_t per_out = kernel.numel() / cout;
  Tensor fused = kernel;
  std::vector<float> fused_bias(cout);
  for (std::size_t c = 0; c < cout; ++c) {
    const double denom = static_cast<double>(bn.running_var[c]) + bn.eps;
    if (!(denom > 0.0)) throw Error("fuse_conv_bn: var + eps <= 0 at channel " + std::to_string(c));
    const double scale = bn.gamma[c] / std::sqrt(denom);
    for (std::size_t i = 0; i < per_out; ++i) {
      fused[c * per_out + i] = static_cast<float>(kernel[c * per_out + i] * scale);
    }
    const double b = bias.empty() ? 0.0 : bias[c];
    fused_bias[c] = static_cast<float>(bn.beta[c] + (b - bn.running_mean[c]) * scale);
  }
  return {std::move(fused), std::move(fused_bias)};
}

Tensor pad_kernel_to_3x3(const Tensor& kernel) {
  if (kernel.rank() != 4 || kernel.dim(2) != 1 || kernel.dim(3) != 1) {
    throw ShapeError("pad_kernel_to_3x3: expected [C, Cin, 1, 1], got " +
                     shape_to_string(kernel.shape()));
  }
  const std::size_t c = kernel.dim(0), cin = kernel.dim(1);
  Tensor out({c, cin, 3, 3});
  for (std::size_t i = 0; i < c * cin; ++i) out[i * 9 + 4] = kernel[i];
  return out;
}

Tensor identity_as_dw_kernel(std::size_t channels) {
  Tensor out({channels, 1, 3, 3});
  for (std::size_t c = 0; c < channels; ++c) out[c * 9 + 4] = 1.0f;
  return out;
}

Tensor identity_as_pw_kernel(std::size_t channels) {
  Tensor out({channels, channels, 1, 1});
  for (std::size_t c = 0; c < channels; ++c) out[c * channels + c] = 1.0f;
  return out;
}

RepDwcDeployParams reparameterize_block(const RepDwcTrainParams& train) {
  train.validate();
  const std::size_t cin = train.in_channels();
  const std::size_t cout = train.out_channels();

  KernelSum dw;
  for (const auto& br : train.dw_branches) {
    auto [k, b] = fuse_conv_bn(br.kernel, {}, br.bn);
    dw.add(k.dim(2) == 1 ? pad_kernel_to_3x3(k) : k, b);
  }
  if (train.dw_identity) {
    auto [k, b] = fuse_conv_bn(identity_as_dw_kernel(cin), {}, *train.dw_identity);
    dw.add(k, b);
  }
  KernelSum pw;
  for (const auto& br : train.pw_branches) {
    auto [k, b] = fuse_conv_bn(br.kernel, {}, br.bn);
    pw.add(k, b);
  }
  if (train.pw_identity) {
    auto [k, b] = fuse_conv_bn(identity_as_pw_kernel(cout), {}, *train.pw_identity);
    pw.add(k, b);
  }

  RepDwcDeployParams out;
  std::tie(out.dw_kernel, out.dw_bias) = dw.finish({cin, 1, 3, 3});
  std::tie(out.pw_kernel, out.pw_bias) = pw.finish({cout, cin, 1, 1});
  out.stride = train.stride;
  return out;
}

Tensor rep_dwc_block_forward(const Tensor& x, const RepDwcTrainParams& params) {
  params.validate();
  if (x.rank() != 3 || x.dim(0) != params.in_channels()) {
    throw ShapeError("rep-dwc: input " + shape_to_string(x.shape()) + " does not have " +
                     std::to_string(params.in_channels()) + " channels");
  }
  std::optional<Tensor> dw_sum;
  auto accumulate = [](std::optional<Tensor>& sum, Tensor branch) {
    if (!sum) {
      sum = std::move(branch);
    } else {
      for (std::size_t i = 0; i < sum->numel(); ++i) (*sum)[i] += branch[i];
    }
  };
  for (const auto& br : params.dw_branches) {
    accumulate(dw_sum, batch_norm_inference(
                           depthwise_conv2d(x, br.kernel, {}, params.stride, dw_padding(br.kernel)),
                           br.bn));
  }
  if (params.dw_identity) accumulate(dw_sum, batch_norm_inference(x, *params.dw_identity));
  if (!dw_sum) throw ShapeError("rep-dwc: block has no depthwise branches");
  const Tensor hidden = relu(std::move(*dw_sum));

  std::optional<Tensor> pw_sum;
  for (const auto& br : params.pw_branches) {
    accumulate(pw_sum, batch_norm_inference(conv2d(hidden, br.kernel, {}, {}), br.bn));
  }
  if (params.pw_identity) accumulate(pw_sum, batch_norm_inference(hidden, *params.pw_identity));
  if (!pw_sum) throw ShapeError("rep-dwc: block has no pointwise branches");
  return relu(std::move(*pw_sum));
}

Tensor rep_dwc_block_forward(const Tensor& x, const RepDwcDeployParams& params) {
  params.validate();
  if (x.rank() != 3 || x.dim(0) != params.in_channels()) {
    throw ShapeError("rep-dwc: input " + shape_to_string(x.shape()) + " does not have " +
                     std::to_string(params.in_channels()) + " channels");
  }
  Tensor hidden = relu(depthwise_conv2d(x, params.dw_kernel, params.dw_bias, params.stride, 1));
  return relu(conv2d(hidden, params.pw_kernel, params.pw_bias, {}));
}

Tensor rep_dwc_block_forward(const Tensor& x, const RepDwcParams& params) {
  return std::visit([&](const auto& p) { return rep_dwc_block_forward(x, p); }, params);
}

std::size_t count_block_params(const RepDwcTrainParams& params) {
  std::size_t n = 0;
  for (const auto& br : params.dw_branches) n += br.kernel.numel() + 4 * br.bn.channels();
  for (const auto& br : params.pw_branches) n += br.kernel.numel() + 4 * br.bn.channels();
  if (params.dw_identity) n += 4 * params.dw_identity->channels();
  if (params.pw_identity) n += 4 * params.pw_identity->channels();
  return n;
}

std::size_t count_block_params(const RepDwcDeployParams& params) {
  return params.dw_kernel.numel() + params.dw_bias.size() + params.pw_kernel.numel() +
         params.pw_bias.size();
}

std::size_t count_block_params(const RepDwcParams& params) {
  return std::visit([](const auto& p) { return count_block_params(p); }, params);
}

std::size_t rep_dwc_train_param_count(std::size_t cin, std::size_t cout, std::size_t stride,
                                      std::size_t m) {
  std::size_t n = (9 * cin + 4 * cin) + (cin + 4 * cin);
  if (stride == 1) n += 4 * cin;
  n += m * (cin * cout + 4 * cout);
  if (cin == cout) n += 4 * cout;
  return n;
}

std::size_t rep_dwc_deploy_param_count(std::size_t cin, std::size_t cout) {
  return 9 * cin + cin + cin * cout + cout;
}

BatchNormParams load_batch_norm(const WeightStore& store, const std::string& prefix,
                                std::size_t channels, float eps) {
  BatchNormParams bn;
  bn.gamma = store.require_vector(prefix + ".bn.gamma", channels);
  bn.beta = store.require_vector(prefix + ".bn.beta", channels);
  bn.running_mean = store.require_vector(prefix + ".bn.running_mean", channels);
  bn.running_var = store.require_vector(prefix + ".bn.running_var", channels);
  bn.eps = eps;
  bn.validate();
  return bn;
}

RepDwcTrainParams load_rep_dwc_train(const WeightStore& store, const RepDwcLayout& layout,
                                     float bn_eps) {
  const std::string& p = layout.prefix;
  const std::size_t cin = layout.in_channels, cout = layout.out_channels;
  RepDwcTrainParams t;
  t.stride = layout.stride;
  t.dw_branches.push_back({store.require(p + ".dw_3x3.weight", {cin, 1, 3, 3}),
                           load_batch_norm(store, p + ".dw_3x3", cin, bn_eps)});
  t.dw_branches.push_back({store.require(p + ".dw_1x1.weight", {cin, 1, 1, 1}),
                           load_batch_norm(store, p + ".dw_1x1", cin, bn_eps)});
  if (layout.stride == 1) t.dw_identity = load_batch_norm(store, p + ".dw_id", cin, bn_eps);
  for (std::size_t k = 0; k < layout.m; ++k) {
    const std::string br = p + ".pw_" + std::to_string(k);
    t.pw_branches.push_back({store.require(br + ".weight", {cout, cin, 1, 1}),
                             load_batch_norm(store, br, cout, bn_eps)});
  }
  if (cin == cout) t.pw_identity = load_batch_norm(store, p + ".pw_id", cout, bn_eps);
  t.validate();
  return t;
}

RepDwcDeployParams load_rep_dwc_deploy(const WeightStore& store, const RepDwcLayout& layout) {
  const std::string& p = layout.prefix;
  const std::size_t cin = layout.in_channels, cout = layout.out_channels;
  RepDwcDeployParams d;
  d.dw_kernel = store.require(p + ".dw.weight", {cin, 1, 3, 3});
  d.dw_bias = store.require_vector(p + ".dw.bias", cin);
  d.pw_kernel = store.require(p + ".pw.weight", {cout, cin, 1, 1});
  d.pw_bias = store.require_vector(p + ".pw.bias", cout);
  d.stride = layout.stride;
  d.validate();
  return d;
}

void store_rep_dwc_deploy(WeightStore& store, const std::string& prefix,
                          const RepDwcDeployParams& params) {
  store.set(prefix + ".dw.weight", params.dw_kernel);
  store.set(prefix + ".dw.bias", Tensor({params.dw_bias.size()}, params.dw_bias));
  store.set(prefix + ".pw.weight", params.pw_kernel);
  store.set(prefix + ".pw.bias", Tensor({params.pw_bias.size()}, params.pw_bias));
}

}  // namespace rnx
