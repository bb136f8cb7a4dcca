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

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rnx/ops.hpp"
#include "rnx/tensor.hpp"
#include "rnx/weight_store.hpp"

namespace rnx {

/// A convolution kernel followed by batch norm, as used in one training branch.
struct ConvBnBranch {
  Tensor kernel;
  BatchNormParams bn;
};

/// Multi-branch training topology of a re-parameterizable depthwise-separable
/// block.
///
/// Depthwise stage: one 3x3 branch, one 1x1 branch, and a BN-only identity
/// branch when stride is 1. Pointwise stage: `m` 1x1 branches and a BN-only
/// identity branch when in and out channels agree. ReLU follows the sum of
/// each stage.
struct RepDwcTrainParams {
  std::vector<ConvBnBranch> dw_branches;  // [C, 1, k, k], k in {1, 3}
  std::optional<BatchNormParams> dw_identity;
  std::vector<ConvBnBranch> pw_branches;  // [Cout, Cin, 1, 1]
  std::optional<BatchNormParams> pw_identity;
  std::size_t stride = 1;

  std::size_t in_channels() const;
  std::size_t out_channels() const;
  void validate() const;
};

/// Single-path deploy topology: dwconv 3x3 + bias, relu, pwconv + bias, relu.
struct RepDwcDeployParams {
  Tensor dw_kernel;  // [C, 1, 3, 3]
  std::vector<float> dw_bias;
  Tensor pw_kernel;  // [Cout, Cin, 1, 1]
  std::vector<float> pw_bias;
  std::size_t stride = 1;

  std::size_t in_channels() const { return dw_kernel.dim(0); }
  std::size_t out_channels() const { return pw_kernel.dim(0); }
  void validate() const;
};

using RepDwcParams = std::variant<RepDwcTrainParams, RepDwcDeployParams>;

/// Folds batch norm into a preceding convolution. Kernel layout is
/// [Cout, ...]; `bias` may be empty.
std::pair<Tensor, std::vector<float>> fuse_conv_bn(const Tensor& kernel,
                                                   std::span<const float> bias,
                                                   const BatchNormParams& bn);

/// Places a [C, 1, 1, 1] kernel at the centre of a [C, 1, 3, 3] kernel.
Tensor pad_kernel_to_3x3(const Tensor& kernel);

/// Centred delta kernels: depthwise conv with padding 1 becomes the identity.
Tensor identity_as_dw_kernel(std::size_t channels);

/// [C, C, 1, 1] identity matrix kernel.
Tensor identity_as_pw_kernel(std::size_t channels);

RepDwcDeployParams reparameterize_block(const RepDwcTrainParams& train);

Tensor rep_dwc_block_forward(const Tensor& x, const RepDwcTrainParams& params);
Tensor rep_dwc_block_forward(const Tensor& x, const RepDwcDeployParams& params);
Tensor rep_dwc_block_forward(const Tensor& x, const RepDwcParams& params);

std::size_t count_block_params(const RepDwcTrainParams& params);
std::size_t count_block_params(const RepDwcDeployParams& params);
std::size_t count_block_params(const RepDwcParams& params);

/// Parameter count of a block that has not been materialized.
std::size_t rep_dwc_train_param_count(std::size_t cin, std::size_t cout,
                                      std::size_t stride, std::size_t m);
std::size_t rep_dwc_deploy_param_count(std::size_t cin, std::size_t cout);

/// Weight entry names for a block stored under `prefix`, e.g.
/// `backbone.stage0.block1`. Train entries: `{prefix}.dw_3x3.weight`,
/// `{prefix}.dw_3x3.bn.gamma`, ..., `{prefix}.pw_{k}.weight`,
/// `{prefix}.pw_id.bn.running_var`. Deploy entries: `{prefix}.dw.weight`,
/// `{prefix}.dw.bias`, `{prefix}.pw.weight`, `{prefix}.pw.bias`.
struct RepDwcLayout {
  std::string prefix;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t stride = 1;
  std::size_t m = 1;
};

RepDwcTrainParams load_rep_dwc_train(const WeightStore& store, const RepDwcLayout& layout,
                                     float bn_eps);
RepDwcDeployParams load_rep_dwc_deploy(const WeightStore& store, const RepDwcLayout& layout);
void store_rep_dwc_deploy(WeightStore& store, const std::string& prefix,
                          const RepDwcDeployParams& params);

/// Reads batch norm statistics stored as `{prefix}.bn.{gamma,beta,running_mean,running_var}`.
BatchNormParams load_batch_norm(const WeightStore& store, const std::string& prefix,
                                std::size_t channels, float eps);

}  // namespace rnx
