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
#include <string>
#include <utility>
#include <vector>

#include "rnx/tensor.hpp"
#include "rnx/weight_store.hpp"

namespace rnx {

/// Deformable convolution v3 layer with C input and output channels.
///
/// For output location p0 the layer computes, per group n of the projected
/// input x_n,
///
///   agg_n(p0) = sum_k m_nk(p0) * x_n(p0 + p_k + dp_nk(p0))
///
/// where p_k are the fixed taps of a square kernel, dp_nk are offsets
/// predicted by a 3x3 convolution over the layer input, and m_nk is a softmax
/// over k of another 3x3 convolution. Groups are concatenated and passed
/// through the output projection. Samples use bilinear interpolation with a
/// zero border.
struct DcnV3Params {
  std::size_t groups = 4;   // N
  std::size_t points = 9;   // K, an odd square
  Tensor input_proj_weight;   // [C, C, 1, 1]
  std::vector<float> input_proj_bias;
  Tensor output_proj_weight;  // [C, C, 1, 1]
  std::vector<float> output_proj_bias;
  Tensor offset_weight;       // [2*N*K, C, 3, 3]; channel 2*(n*K+k) is dx, +1 is dy
  std::vector<float> offset_bias;
  Tensor modulation_weight;   // [N*K, C, 3, 3]; channel n*K+k
  std::vector<float> modulation_bias;

  std::size_t channels() const { return input_proj_weight.dim(0); }
  void validate() const;
  std::size_t parameter_count() const;
};

/// Kernel taps as (dy, dx) pairs in row-major order, e.g. {-1,0,1}^2 for K=9.
std::vector<std::pair<int, int>> dcn_base_taps(std::size_t points);

/// Offsets [2NK, H, W] and softmax-normalized modulation [NK, H, W].
std::pair<Tensor, Tensor> compute_offsets_modulation(const Tensor& x, const DcnV3Params& p);

/// Aggregation step alone, on an already projected input.
Tensor dcnv3_aggregate(const Tensor& projected, const Tensor& offsets, const Tensor& modulation,
                       std::size_t groups, std::size_t points);

Tensor dcnv3_forward(const Tensor& x, const DcnV3Params& p);

/// Entries `{prefix}.{input_proj|output_proj|offset|modulation}.{weight|bias}`.
DcnV3Params load_dcnv3(const WeightStore& store, const std::string& prefix,
                       std::size_t channels, std::size_t groups, std::size_t points);

std::size_t dcnv3_param_count(std::size_t channels, std::size_t groups, std::size_t points);

}  // namespace rnx
