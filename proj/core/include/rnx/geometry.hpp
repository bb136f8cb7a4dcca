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
#include <vector>

#include "rnx/head_output.hpp"
#include "rnx/pillar.hpp"

namespace rnx {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Wraps an angle into (-pi, pi].
double normalize_yaw(double yaw);

/// Oriented box: center (x, y, z), length along the heading, width, height,
/// and yaw about +z. Sizes are strictly positive.
struct Box3D {
  double x = 0.0, y = 0.0, z = 0.0;
  double l = 1.0, w = 1.0, h = 1.0;
  double yaw = 0.0;

  Box3D() = default;
  /// Throws Error on non-positive sizes; normalizes yaw.
  Box3D(double x, double y, double z, double l, double w, double h, double yaw);

  /// Counter-clockwise BEV corners.
  std::array<Vec2, 4> bev_corners() const;
  double bev_area() const { return l * w; }
  double volume() const { return l * w * h; }
  double z_bottom() const { return z - h / 2; }
  double z_top() const { return z + h / 2; }
};

struct Detection {
  Box3D box;
  std::size_t class_id = 0;
  double score = 0.0;
};

/// Area of a simple polygon by the shoelace formula (signed, CCW positive).
double polygon_area(const std::vector<Vec2>& poly);

/// Clips `subject` by every edge of the convex CCW polygon `clip`.
std::vector<Vec2> clip_convex(const std::vector<Vec2>& subject, const std::vector<Vec2>& clip);

double bev_intersection_area(const Box3D& a, const Box3D& b);
double rotated_bev_iou(const Box3D& a, const Box3D& b);
double iou3d(const Box3D& a, const Box3D& b);

/// iou3d minus squared center distance over the squared diagonal of the
/// axis-aligned box enclosing all corners of both boxes.
double diou(const Box3D& a, const Box3D& b);

/// Meters covered by one head cell along x and y.
Vec2 head_cell_size(const GridConfig& grid, const HeadOutput& head);

/// Box regressed at one head cell.
Box3D decode_box_at(const HeadOutput& head, const GridConfig& grid, std::size_t row,
                    std::size_t col);

/// Cell and regression targets that decode back to `box`.
struct BoxEncoding {
  std::size_t row = 0;
  std::size_t col = 0;
  std::array<float, kBoxChannels> regression{};
};
BoxEncoding encode_box(const Box3D& box, const GridConfig& grid, std::size_t head_h,
                       std::size_t head_w);

/// Peaks of each class heatmap (3x3 local maxima at or above the threshold;
/// among equal neighbours the first in scan order wins), best `top_k` by
/// score.
std::vector<Detection> decode_detections(const HeadOutput& head, const GridConfig& grid,
                                         double score_threshold = 0.1, std::size_t top_k = 100);

/// Class-wise greedy suppression by rotated BEV IoU. Output is sorted by
/// descending score.
std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_threshold);

}  // namespace rnx
