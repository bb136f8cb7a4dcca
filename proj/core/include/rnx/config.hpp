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

#include <filesystem>
#include <string>
#include <vector>

#include "rnx/graph.hpp"
#include "rnx/losses.hpp"

namespace rnx {

/// Post-processing and evaluation settings that are not part of the graph.
struct RuntimeOptions {
  std::vector<std::string> class_names;
  std::vector<double> iou_thresholds;  // per class, used by `eval`
  double score_threshold = 0.1;
  std::size_t top_k = 100;
  double nms_iou_threshold = 0.5;
  bool normalize_iou_loss = false;
};

struct DetectorConfig {
  GraphConfig graph;
  LossWeights loss;
  RuntimeOptions runtime;
};

/// Parses `key = value` lines. Text after `#` is a comment. Lists are comma
/// separated. Mandatory keys:
///   pillar_size_x pillar_size_y pillar_size_z x_min x_max y_min y_max
///   z_min z_max grid_w grid_h point_columns selected_columns class_names neck
/// Optional keys and their defaults:
///   pillar_channels = 64, max_points_per_pillar = 32,
///   stage_channels = 64,128,256, stage_depths = 3,5,5, rep_branches = 1,
///   backbone = rep_dwc (or dense), dcn_positions = 4 (none for fpn/pan),
///   dcn_groups = 4, dcn_points = 9, head_channels = 64, bn_eps = 0.001,
///   iou_thresholds = 0.5 for every class, score_threshold = 0.1, top_k = 100,
///   nms_iou_threshold = 0.5, loss_focal = 1, loss_l1 = 0.25, loss_iou = 0.5,
///   loss_diou = 1, loss_corner = 1, iou_loss_normalize = false
/// Every error names the offending line and key.
DetectorConfig parse_config(const std::string& text);
DetectorConfig load_config(const std::filesystem::path& path);

/// Renders a configuration that parse_config reads back unchanged.
std::string format_config(const DetectorConfig& cfg);

}  // namespace rnx
