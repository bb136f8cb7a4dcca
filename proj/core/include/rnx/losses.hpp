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
#include <cstdint>
#include <span>
#include <vector>

#include "rnx/geometry.hpp"
#include "rnx/head_output.hpp"
#include "rnx/pillar.hpp"

namespace rnx {

/// Weights of the five loss terms.
struct LossWeights {
  double focal = 1.0;
  double l1 = 0.25;
  double iou = 0.5;
  double diou = 1.0;
  double corner_mse = 1.0;

  void validate() const;
};

struct LossParts {
  double focal = 0.0;
  double l1 = 0.0;
  double iou = 0.0;
  double diou = 0.0;
  double corner_mse = 0.0;
};

struct LabeledBox {
  Box3D box;
  std::size_t class_id = 0;
};

/// Annotated boxes of one frame.
struct GroundTruthSet {
  std::vector<LabeledBox> boxes;
};

/// Penalty-reduced pixelwise focal loss of center heatmaps, normalized by the
/// number of target pixels equal to 1 (at least 1). Predictions are clamped
/// to [1e-6, 1 - 1e-6].
double focal_loss(const Tensor& pred, const Tensor& target, double alpha = 2.0,
                  double beta = 4.0);

/// Mean absolute error over the masked cells and all regression channels.
/// `mask` has one entry per cell of the [C, H, W] maps.
double l1_regression_loss(const Tensor& pred, const Tensor& target,
                          std::span<const std::uint8_t> mask);

/// Sum (or mean, when `normalize`) of |predicted IoU - iou3d(pred, gt)|.
double iou_consistency_loss(std::span<const double> iou_pred, std::span<const Box3D> pred,
                            std::span<const Box3D> gt, bool normalize = false);

/// Mean of 1 - diou over matched pairs; 0 when there are none.
double diou_loss(std::span<const Box3D> pred, std::span<const Box3D> gt);

double corner_mse_loss(const Tensor& pred, const Tensor& target);

double total_loss(const LossParts& parts, const LossWeights& weights);

/// Gaussian radius, in head cells, used for corner and center targets:
/// max(1, min(l, w) / (6 * cell)).
double target_sigma(const Box3D& box, double cell_size);

/// Adds a unit-peak Gaussian centred on cell (row, col) by elementwise max.
void draw_gaussian(std::span<float> plane, std::size_t height, std::size_t width,
                   std::ptrdiff_t row, std::ptrdiff_t col, double sigma);

/// Dense training targets on a head grid of size h x w.
struct TrainingTargets {
  Tensor heatmap;                   // [num_classes, h, w]
  Tensor regression;                // [8, h, w]
  Tensor corners;                   // [num_classes, h, w]
  std::vector<std::uint8_t> mask;   // h * w, 1 at box centre cells
  std::vector<BoxEncoding> centres; // one per in-grid box, in input order
  std::vector<Box3D> boxes;         // boxes matching `centres`
};

TrainingTargets render_targets(const GroundTruthSet& gts, const GridConfig& grid,
                               std::size_t num_classes, std::size_t h, std::size_t w);

/// All five loss terms of one frame. Predicted boxes are decoded at each
/// ground-truth centre cell.
LossParts evaluate_losses(const HeadOutput& head, const GroundTruthSet& gts,
                          const GridConfig& grid, bool normalize_iou = false);

}  // namespace rnx
