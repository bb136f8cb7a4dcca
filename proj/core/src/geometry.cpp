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

#include "rnx/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include "rnx/error.hpp"

namespace rnx {
namespace {

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

Vec2 line_intersection(const Vec2& p, const Vec2& q, const Vec2& a, const Vec2& b) {
  // Point on segment pq where it crosses the line through a, b.
  const double dp = cross(a, b, p);
  const double dq = cross(a, b, q);
  const double t = dp / (dp - dq);
  return {p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
}

double z_overlap(const Box3D& a, const Box3D& b) {
  return std::max(0.0, std::min(a.z_top(), b.z_top()) - std::max(a.z_bottom(), b.z_bottom()));
}

}  // namespace

double normalize_yaw(double yaw) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double r = std::remainder(yaw, kTwoPi);
  if (r <= -std::numbers::pi) r += kTwoPi;
  return r;
}

Box3D::Box3D(double x_, double y_, double z_, double l_, double w_, double h_, double yaw_)
    : x(x_), y(y_), z(z_), l(l_), w(w_), h(h_), yaw(normalize_yaw(yaw_)) {
  if (!(l > 0 && w > 0 && h > 0)) {
    throw Error("box sizes must be strictly positive (l=" + std::to_string(l) +
                ", w=" + std::to_string(w) + ", h=" + std::to_string(h) + ")");
  }
}

std::array<Vec2, 4> Box3D::bev_corners() const {
  const double c = std::cos(yaw), s = std::sin(yaw);
  const double hl = l / 2, hw = w / 2;
  const double local[4][2] = {{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}};
  std::array<Vec2, 4> out;
  for (int i = 0; i < 4; ++i) {
    out[i] = {x + local[i][0] * c - local[i][1] * s, y + local[i][0] * s + local[i][1] * c};
  }
  return out;
}

double polygon_area(const std::vector<Vec2>& poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    twice += a.x * b.y - b.x * a.y;
  }
  return twice / 2;
}

std::vector<Vec2> clip_convex(const std::vector<Vec2>& subject, const std::vector<Vec2>& clip) {
  std::vector<Vec2> out = subject;
  for (std::size_t e = 0; e < clip.size() && !out.empty(); ++e) {
    const Vec2& a = clip[e];
    const Vec2& b = clip[(e + 1) % clip.size()];
    std::vector<Vec2> input;
    input.swap(out);
    for (std::size_t i = 0; i < input.size(); ++i) {
      const Vec2& cur = input[i];
      const Vec2& prev = input[(i + input.size() - 1) % input.size()];
      const bool cur_in = cross(a, b, cur) >= 0;
      const bool prev_in = cross(a, b, prev) >= 0;
      if (cur_in) {
        if (!prev_in) out.push_back(line_intersection(prev, cur, a, b));
        out.push_back(cur);
      } else if (prev_in) {
        out.push_back(line_intersection(prev, cur, a, b));
      }
    }
  }
  return out;
}

double bev_intersection_area(const Box3D& a, const Box3D& b) {
  const auto ca = a.bev_corners();
  const auto cb = b.bev_corners();
  const auto poly = clip_convex({ca.begin(), ca.end()}, {cb.begin(), cb.end()});
  if (poly.size() < 3) return 0.0;
  return std::max(0.0, polygon_area(poly));
}

double rotated_bev_iou(const Box3D& a, const Box3D& b) {
  // Clip the box with the smaller area key first so iou(a, b) == iou(b, a)
  // bit for bit.
  const bool swap = std::tie(a.x, a.y, a.l, a.w, a.yaw) > std::tie(b.x, b.y, b.l, b.w, b.yaw);
  const double inter = swap ? bev_intersection_area(b, a) : bev_intersection_area(a, b);
  const double uni = a.bev_area() + b.bev_area() - inter;
  if (!(uni > 0.0) || inter <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou3d(const Box3D& a, const Box3D& b) {
  const bool swap = std::tie(a.x, a.y, a.l, a.w, a.yaw) > std::tie(b.x, b.y, b.l, b.w, b.yaw);
  const double inter_area = swap ? bev_intersection_area(b, a) : bev_intersection_area(a, b);
  const double inter = inter_area * z_overlap(a, b);
  const double uni = a.volume() + b.volume() - inter;
  if (!(uni > 0.0) || inter <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double diou(const Box3D& a, const Box3D& b) {
  double lo_x = INFINITY, lo_y = INFINITY, hi_x = -INFINITY, hi_y = -INFINITY;
  for (const Box3D* box : {&a, &b}) {
    for (const Vec2& c : box->bev_corners()) {
      lo_x = std::min(lo_x, c.x);
      hi_x = std::max(hi_x, c.x);
      lo_y = std::min(lo_y, c.y);
      hi_y = std::max(hi_y, c.y);
    }
  }
  const double lo_z = std::min(a.z_bottom(), b.z_bottom());
  const double hi_z = std::max(a.z_top(), b.z_top());
  const double diag2 = (hi_x - lo_x) * (hi_x - lo_x) + (hi_y - lo_y) * (hi_y - lo_y) +
                       (hi_z - lo_z) * (hi_z - lo_z);
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  const double dist2 = dx * dx + dy * dy + dz * dz;
  return iou3d(a, b) - dist2 / diag2;
}

Vec2 head_cell_size(const GridConfig& grid, const HeadOutput& head) {
  const double sx = static_cast<double>(grid.width_cells) / static_cast<double>(head.width());
  const double sy = static_cast<double>(grid.height_cells) / static_cast<double>(head.height());
  return {grid.pillar_x * sx, grid.pillar_y * sy};
}

Box3D decode_box_at(const HeadOutput& head, const GridConfig& grid, std::size_t row,
                    std::size_t col) {
  const Vec2 cell = head_cell_size(grid, head);
  auto reg = [&](std::size_t ch) -> double { return head.box_regression.at(ch, row, col); };
  return Box3D((static_cast<double>(col) + reg(kOffsetX)) * cell.x + grid.x_min,
               (static_cast<double>(row) + reg(kOffsetY)) * cell.y + grid.y_min, reg(kCenterZ),
               std::exp(reg(kLogLength)), std::exp(reg(kLogWidth)), std::exp(reg(kLogHeight)),
               std::atan2(reg(kSinYaw), reg(kCosYaw)));
}

BoxEncoding encode_box(const Box3D& box, const GridConfig& grid, std::size_t head_h,
                       std::size_t head_w) {
  const double cell_x = grid.pillar_x * static_cast<double>(grid.width_cells) / static_cast<double>(head_w);
  const double cell_y = grid.pillar_y * static_cast<double>(grid.height_cells) / static_cast<double>(head_h);
  const double u = (box.x - grid.x_min) / cell_x;
  const double v = (box.y - grid.y_min) / cell_y;
  if (!(u >= 0 && v >= 0 && u < static_cast<double>(head_w) && v < static_cast<double>(head_h))) {
    throw Error("encode_box: box center outside the grid");
  }
  BoxEncoding e;
  e.col = static_cast<std::size_t>(std::floor(u));
  e.row = static_cast<std::size_t>(std::floor(v));
  e.regression[kOffsetX] = static_cast<float>(u - static_cast<double>(e.col));
  e.regression[kOffsetY] = static_cast<float>(v - static_cast<double>(e.row));
  e.regression[kCenterZ] = static_cast<float>(box.z);
  e.regression[kLogLength] = static_cast<float>(std::log(box.l));
  e.regression[kLogWidth] = static_cast<float>(std::log(box.w));
  e.regression[kLogHeight] = static_cast<float>(std::log(box.h));
  e.regression[kSinYaw] = static_cast<float>(std::sin(box.yaw));
  e.regression[kCosYaw] = static_cast<float>(std::cos(box.yaw));
  return e;
}

std::vector<Detection> decode_detections(const HeadOutput& head, const GridConfig& grid,
                                         double score_threshold, std::size_t top_k) {
  const std::size_t h = head.height(), w = head.width();
  std::vector<Detection> out;
  for (std::size_t cls = 0; cls < head.num_classes(); ++cls) {
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        const float v = head.class_heatmaps.at(cls, r, c);
        if (!(v >= score_threshold)) continue;
        bool peak = true;
        for (int dr = -1; dr <= 1 && peak; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const auto nr = static_cast<std::ptrdiff_t>(r) + dr;
            const auto nc = static_cast<std::ptrdiff_t>(c) + dc;
            if (nr < 0 || nc < 0 || nr >= static_cast<std::ptrdiff_t>(h) ||
                nc >= static_cast<std::ptrdiff_t>(w)) {
              continue;
            }
            const float n = head.class_heatmaps.at(cls, static_cast<std::size_t>(nr),
                                                   static_cast<std::size_t>(nc));
            const bool earlier = dr < 0 || (dr == 0 && dc < 0);
            if (earlier ? !(v > n) : !(v >= n)) {
              peak = false;
              break;
            }
          }
        }
        if (!peak) continue;
        out.push_back({decode_box_at(head, grid, r, c), cls, static_cast<double>(v)});
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  if (out.size() > top_k) out.resize(top_k);
  return out;
}

std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_threshold) {
  std::vector<Detection> sorted = dets;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  std::vector<Detection> kept;
  for (const Detection& d : sorted) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return k.class_id == d.class_id && rotated_bev_iou(k.box, d.box) > iou_threshold;
    });
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

}  // namespace rnx
