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

#include "rnx/metrics.hpp"

#include <algorithm>
#include <stdexcept>

#include "rnx/error.hpp"

namespace rnx {

PrCurve precision_recall(const std::vector<std::vector<Detection>>& dets,
                         const std::vector<GroundTruthSet>& gts, std::size_t class_id,
                         double iou_threshold, IouMode mode) {
  if (dets.size() != gts.size()) {
    throw Error("evaluation needs one detection list per ground-truth frame (" +
                std::to_string(dets.size()) + " vs " + std::to_string(gts.size()) + ")");
  }
  struct Candidate {
    double score;
    std::size_t frame;
    std::size_t index;
  };
  std::vector<Candidate> order;
  std::vector<std::vector<const Box3D*>> frame_gts(gts.size());
  PrCurve curve;
  for (std::size_t f = 0; f < gts.size(); ++f) {
    for (const LabeledBox& g : gts[f].boxes) {
      if (g.class_id == class_id) frame_gts[f].push_back(&g.box);
    }
    curve.num_gt += frame_gts[f].size();
    for (std::size_t i = 0; i < dets[f].size(); ++i) {
      if (dets[f][i].class_id == class_id) order.push_back({dets[f][i].score, f, i});
    }
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score > b.score; });

  std::vector<std::vector<bool>> taken(gts.size());
  for (std::size_t f = 0; f < gts.size(); ++f) taken[f].assign(frame_gts[f].size(), false);

  std::size_t tp = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const Candidate& c = order[rank];
    const Box3D& box = dets[c.frame][c.index].box;
    double best = -1.0;
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < frame_gts[c.frame].size(); ++j) {
      if (taken[c.frame][j]) continue;
      const double iou = mode == IouMode::kBev ? rotated_bev_iou(box, *frame_gts[c.frame][j])
                                               : iou3d(box, *frame_gts[c.frame][j]);
      if (iou > best) {
        best = iou;
        best_j = j;
      }
    }
    if (best >= iou_threshold && best > 0.0) {
      taken[c.frame][best_j] = true;
      ++tp;
    }
    curve.true_positives.push_back(tp);
    curve.precision.push_back(static_cast<double>(tp) / static_cast<double>(rank + 1));
    curve.recall.push_back(curve.num_gt == 0 ? 0.0
                                             : static_cast<double>(tp) /
                                                   static_cast<double>(curve.num_gt));
  }
  return curve;
}

std::optional<double> evaluate_ap(const std::vector<std::vector<Detection>>& dets,
                                  const std::vector<GroundTruthSet>& gts, std::size_t class_id,
                                  double iou_threshold, IouMode mode, std::size_t recall_points) {
  if (recall_points == 0) throw Error("recall_points must be positive");
  const PrCurve curve = precision_recall(dets, gts, class_id, iou_threshold, mode);
  if (curve.num_gt == 0) return std::nullopt;
  // Suffix maximum of precision, so best_from[i] = max precision at rank >= i.
  std::vector<double> best_from(curve.precision.size() + 1, 0.0);
  for (std::size_t i = curve.precision.size(); i-- > 0;) {
    best_from[i] = std::max(best_from[i + 1], curve.precision[i]);
  }
  double sum = 0.0;
  std::size_t rank = 0;
  for (std::size_t k = 1; k <= recall_points; ++k) {
    // recall >= k / R  <=>  tp * R >= k * num_gt, in exact integers.
    while (rank < curve.true_positives.size() &&
           curve.true_positives[rank] * recall_points < k * curve.num_gt) {
      ++rank;
    }
    if (rank == curve.true_positives.size()) break;
    sum += best_from[rank];
  }
  return sum / static_cast<double>(recall_points);
}

std::optional<double> evaluate_map(std::span<const std::optional<double>> aps) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& ap : aps) {
    if (ap) {
      sum += *ap;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace rnx
