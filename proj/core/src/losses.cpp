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

#include "rnx/losses.hpp"

#include <algorithm>
#include <cmath>

#include "rnx/error.hpp"

namespace rnx {
namespace {

constexpr double kClamp = 1e-6;

void same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": prediction " + shape_to_string(a.shape()) +
                     " vs target " + shape_to_string(b.shape()));
  }
}

void same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": " + std::to_string(a) + " predictions vs " +
                     std::to_string(b) + " targets");
  }
}

}  // namespace

void LossWeights::validate() const {
  for (double v : {focal, l1, iou, diou, corner_mse}) {
    if (!std::isfinite(v) || v < 0.0) throw ConfigError("loss weights must be finite and >= 0");
  }
}

double focal_loss(const Tensor& pred, const Tensor& target, double alpha, double beta) {
  same_shape(pred, target, "focal_loss");
  double sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const double p = std::clamp(static_cast<double>(pred[i]), kClamp, 1.0 - kClamp);
    const double t = target[i];
    if (t == 1.0) {
      sum -= std::pow(1.0 - p, alpha) * std::log(p);
      ++positives;
    } else {
      sum -= std::pow(1.0 - t, beta) * std::pow(p, alpha) * std::log(1.0 - p);
    }
  }
  return sum / static_cast<double>(std::max<std::size_t>(positives, 1));
}

double l1_regression_loss(const Tensor& pred, const Tensor& target,
                          std::span<const std::uint8_t> mask) {
  same_shape(pred, target, "l1_regression_loss");
  if (pred.rank() != 3) throw ShapeError("l1_regression_loss: maps must be [C, H, W]");
  const std::size_t plane = pred.dim(1) * pred.dim(2);
  if (mask.size() != plane) {
    throw ShapeError("l1_regression_loss: mask has " + std::to_string(mask.size()) +
                     " cells, maps have " + std::to_string(plane));
  }
  double sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < plane; ++i) {
    if (!mask[i]) continue;
    ++positives;
    for (std::size_t c = 0; c < pred.dim(0); ++c) {
      sum += std::abs(static_cast<double>(pred[c * plane + i]) - target[c * plane + i]);
    }
  }
  if (positives == 0) return 0.0;
  return sum / static_cast<double>(positives * pred.dim(0));
}

double iou_consistency_loss(std::span<const double> iou_pred, std::span<const Box3D> pred,
                            std::span<const Box3D> gt, bool normalize) {
  same_length(iou_pred.size(), pred.size(), "iou_consistency_loss");
  same_length(pred.size(), gt.size(), "iou_consistency_loss");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(iou_pred[i] - iou3d(pred[i], gt[i]));
  if (normalize && !pred.empty()) sum /= static_cast<double>(pred.size());
  return sum;
}

double diou_loss(std::span<const Box3D> pred, std::span<const Box3D> gt) {
  same_length(pred.size(), gt.size(), "diou_loss");
  if (pred.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += 1.0 - diou(pred[i], gt[i]);
  return sum / static_cast<double>(pred.size());
}

double corner_mse_loss(const Tensor& pred, const Tensor& target) {
  same_shape(pred, target, "corner_mse_loss");
  if (pred.numel() == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const double d = static_cast<double>(pred[i]) - target[i];
    sum += d * d;
  }
  return sum / static_cast<double>(pred.numel());
}

double total_loss(const LossParts& parts, const LossWeights& weights) {
  return weights.focal * parts.focal + weights.l1 * parts.l1 + weights.iou * parts.iou +
         weights.diou * parts.diou + weights.corner_mse * parts.corner_mse;
}

double target_sigma(const Box3D& box, double cell_size) {
  return std::max(1.0, std::min(box.l, box.w) / (6.0 * cell_size));
}

void draw_gaussian(std::span<float> plane, std::size_t height, std::size_t width,
                   std::ptrdiff_t row, std::ptrdiff_t col, double sigma) {
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  for (std::ptrdiff_t dr = -radius; dr <= radius; ++dr) {
    const std::ptrdiff_t r = row + dr;
    if (r < 0 || r >= static_cast<std::ptrdiff_t>(height)) continue;
    for (std::ptrdiff_t dc = -radius; dc <= radius; ++dc) {
      const std::ptrdiff_t c = col + dc;
      if (c < 0 || c >= static_cast<std::ptrdiff_t>(width)) continue;
      const auto v = static_cast<float>(
          std::exp(-static_cast<double>(dr * dr + dc * dc) / (2.0 * sigma * sigma)));
      float& dst = plane[static_cast<std::size_t>(r) * width + static_cast<std::size_t>(c)];
      dst = std::max(dst, v);
    }
  }
}

TrainingTargets render_targets(const GroundTruthSet& gts, const GridConfig& grid,
                               std::size_t num_classes, std::size_t h, std::size_t w) {
  TrainingTargets t;
  t.heatmap = Tensor({num_classes, h, w});
  t.regression = Tensor({kBoxChannels, h, w});
  t.corners = Tensor({num_classes, h, w});
  t.mask.assign(h * w, 0);
  const double cell_x = grid.pillar_x * static_cast<double>(grid.width_cells) / static_cast<double>(w);
  const double cell_y = grid.pillar_y * static_cast<double>(grid.height_cells) / static_cast<double>(h);
  const double cell = std::min(cell_x, cell_y);
  for (const LabeledBox& gt : gts.boxes) {
    if (gt.class_id >= num_classes) throw Error("ground truth class id out of range");
    const double sigma = target_sigma(gt.box, cell);
    for (const Vec2& corner : gt.box.bev_corners()) {
      const double u = (corner.x - grid.x_min) / cell_x;
      const double v = (corner.y - grid.y_min) / cell_y;
      if (u < 0 || v < 0 || u >= static_cast<double>(w) || v >= static_cast<double>(h)) continue;
      draw_gaussian(t.corners.channel(gt.class_id), h, w, static_cast<std::ptrdiff_t>(v),
                    static_cast<std::ptrdiff_t>(u), sigma);
    }
    BoxEncoding e;
    try {
      e = encode_box(gt.box, grid, h, w);
    } catch (const Error&) {
      continue;  // centre outside the grid
    }
    draw_gaussian(t.heatmap.channel(gt.class_id), h, w, static_cast<std::ptrdiff_t>(e.row),
                  static_cast<std::ptrdiff_t>(e.col), sigma);
    for (std::size_t c = 0; c < kBoxChannels; ++c) t.regression.at(c, e.row, e.col) = e.regression[c];
    t.mask[e.row * w + e.col] = 1;
    t.centres.push_back(e);
    t.boxes.push_back(gt.box);
  }
  return t;
}

LossParts evaluate_losses(const HeadOutput& head, const GroundTruthSet& gts,
                          const GridConfig& grid, bool normalize_iou) {
  const TrainingTargets t =
      render_targets(gts, grid, head.num_classes(), head.height(), head.width());
  LossParts parts;
  parts.focal = focal_loss(head.class_heatmaps, t.heatmap);
  parts.l1 = l1_regression_loss(head.box_regression, t.regression, t.mask);
  parts.corner_mse = corner_mse_loss(head.corner_heatmaps, t.corners);
  std::vector<Box3D> pred;
  std::vector<double> iou_pred;
  for (const BoxEncoding& e : t.centres) {
    pred.push_back(decode_box_at(head, grid, e.row, e.col));
    iou_pred.push_back(head.iou_prediction.at(0, e.row, e.col));
  }
  parts.iou = iou_consistency_loss(iou_pred, pred, t.boxes, normalize_iou);
  parts.diou = diou_loss(pred, t.boxes);
  return parts;
}

}  // namespace rnx
