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
#include <span>
#include <vector>

#include "rnx/geometry.hpp"
#include "rnx/losses.hpp"

namespace rnx {

enum class IouMode { kBev, k3d };

/// Cumulative precision/recall after each detection in descending score order.
struct PrCurve {
  std::vector<std::size_t> true_positives;  // cumulative
  std::vector<double> precision;
  std::vector<double> recall;
  std::size_t num_gt = 0;
};

/// Greedy matching per frame in descending score order; each ground truth is
/// matched at most once, to the unmatched box with the highest IoU, when that
/// IoU reaches `iou_threshold`.
PrCurve precision_recall(const std::vector<std::vector<Detection>>& dets,
                         const std::vector<GroundTruthSet>& gts, std::size_t class_id,
                         double iou_threshold, IouMode mode);

/// Interpolated AP: mean over r = 1/R, ..., R/R of the best precision reached
/// at recall >= r. Absent when the class has no ground truth.
std::optional<double> evaluate_ap(const std::vector<std::vector<Detection>>& dets,
                                  const std::vector<GroundTruthSet>& gts, std::size_t class_id,
                                  double iou_threshold, IouMode mode,
                                  std::size_t recall_points = 40);

/// Mean of the defined APs; absent when none is defined.
std::optional<double> evaluate_map(std::span<const std::optional<double>> aps);

}  // namespace rnx
