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

#include "rnx/tensor.hpp"

namespace rnx {

/// Regression channels of the box map, in order.
enum BoxChannel : std::size_t {
  kOffsetX = 0,
  kOffsetY,
  kCenterZ,
  kLogLength,
  kLogWidth,
  kLogHeight,
  kSinYaw,
  kCosYaw,
  kBoxChannels
};

/// Dense center-head predictions on the stride-2 grid.
struct HeadOutput {
  Tensor class_heatmaps;   // [num_classes, H, W], sigmoid
  Tensor box_regression;   // [8, H, W]
  Tensor iou_prediction;   // [1, H, W], sigmoid
  Tensor corner_heatmaps;  // [num_classes, H, W], sigmoid

  std::size_t num_classes() const { return class_heatmaps.dim(0); }
  std::size_t height() const { return class_heatmaps.dim(1); }
  std::size_t width() const { return class_heatmaps.dim(2); }
};

}  // namespace rnx
