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

#include "rnx/geometry.hpp"
#include "rnx/losses.hpp"
#include "rnx/pillar.hpp"
#include "rnx/weight_store.hpp"

namespace rnx {

/// Little-endian float32 rows of `schema.column_count()` values (KITTI .bin).
RadarPointCloud load_point_cloud(const std::filesystem::path& path, const PointSchema& schema);
void save_point_cloud(const std::filesystem::path& path, const RadarPointCloud& cloud);

/// KITTI-style object lines:
///   type truncated occluded alpha x1 y1 x2 y2 h w l x y z yaw [score]
/// Boxes are read in the point-cloud frame with (x, y, z) the box centre.
/// Objects whose type is not in `class_names` are skipped.
GroundTruthSet parse_labels(const std::string& text, const std::vector<std::string>& class_names);
GroundTruthSet load_labels(const std::filesystem::path& path,
                           const std::vector<std::string>& class_names);

/// As parse_labels, keeping the optional score column (1 when absent).
std::vector<Detection> parse_detections(const std::string& text,
                                        const std::vector<std::string>& class_names);
std::vector<Detection> load_detections(const std::filesystem::path& path,
                                       const std::vector<std::string>& class_names);

std::string format_detections(const std::vector<Detection>& dets,
                              const std::vector<std::string>& class_names);
void save_detections(const std::filesystem::path& path, const std::vector<Detection>& dets,
                     const std::vector<std::string>& class_names);

/// Weight container, little-endian:
///   "RNXW" | u32 version = 1 | u32 entry_count |
///   entries: u16 name_length | name | u8 ndim | ndim x u32 dims | f32 data
std::string serialize_weights(const WeightStore& store);
WeightStore deserialize_weights(const std::string& bytes);
void save_weights(const std::filesystem::path& path, const WeightStore& store);
WeightStore load_weights(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace rnx
