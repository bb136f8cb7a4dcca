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
#include <span>
#include <vector>

#include "rnx/tensor.hpp"

namespace rnx {

/// Inference-time batch normalization statistics for one layer.
struct BatchNormParams {
  std::vector<float> gamma;
  std::vector<float> beta;
  std::vector<float> running_mean;
  std::vector<float> running_var;
  float eps = 1e-3f;

  std::size_t channels() const { return gamma.size(); }

  /// Throws ShapeError on unequal vector lengths, Error on negative variance.
  void validate() const;

  /// gamma = 1, beta = 0, mean = 0, var = 1.
  static BatchNormParams identity(std::size_t channels, float eps = 0.0f);
};

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t groups = 1;
};

/// Grouped 2-D cross-correlation with zero padding. `bias` may be empty.
/// Products are accumulated in double, ordered by input channel, then
/// kernel row, then kernel column.
Tensor conv2d(const Tensor& input, const Tensor& kernel,
              std::span<const float> bias, const Conv2dOptions& options);

/// Same result as conv2d with groups == C, bit for bit.
Tensor depthwise_conv2d(const Tensor& input, const Tensor& kernel,
                        std::span<const float> bias, std::size_t stride,
                        std::size_t padding);

Tensor batch_norm_inference(const Tensor& x, const BatchNormParams& bn);

Tensor relu(Tensor x);
Tensor sigmoid(Tensor x);
Tensor add(const Tensor& a, const Tensor& b);

/// Fractionally strided convolution with a [Cin, Cout, 2, 2] kernel and
/// stride 2; the only configuration the graph uses.
Tensor transpose_conv2d(const Tensor& input, const Tensor& kernel,
                        std::span<const float> bias, std::size_t kernel_size = 2,
                        std::size_t stride = 2);

/// Bilinear read of one plane at column `x`, row `y`. Neighbours outside the
/// plane contribute zero.
float bilinear_sample_plane(std::span<const float> plane, std::size_t height,
                            std::size_t width, double x, double y);

/// Bilinear read of every channel of a [C, H, W] feature map.
std::vector<float> bilinear_sample(const Tensor& feature, double x, double y);

Tensor concat_channels(std::span<const Tensor> parts);
Tensor slice_channels(const Tensor& x, std::size_t begin, std::size_t count);

}  // namespace rnx
