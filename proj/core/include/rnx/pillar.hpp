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
#include <string>
#include <vector>

#include "rnx/ops.hpp"
#include "rnx/tensor.hpp"
#include "rnx/weight_store.hpp"

namespace rnx {

/// Column layout of a point cloud file and the columns fed to the encoder.
/// Columns 0, 1, 2 must be x, y, z in meters.
struct PointSchema {
  std::vector<std::string> column_names;
  std::vector<std::size_t> selected_columns;

  std::size_t column_count() const { return column_names.size(); }
  void validate() const;

  /// x, y, z, RCS, v_r, v_r_compensated, time; all seven selected.
  static PointSchema vod();
  /// x, y, z, v_r, range, SNR, plus two angle columns that are not selected.
  static PointSchema tj4d();
};

struct RadarPointCloud {
  PointSchema schema;
  std::vector<float> values;  // N x F, row-major

  std::size_t size() const;
  std::span<const float> row(std::size_t i) const;
};

/// BEV grid geometry; distances in meters.
struct GridConfig {
  double pillar_x = 0.16;
  double pillar_y = 0.16;
  double pillar_z = 5.0;
  double x_min = 0.0, x_max = 51.2;
  double y_min = -25.6, y_max = 25.6;
  double z_min = -3.0, z_max = 2.0;
  std::size_t width_cells = 320;
  std::size_t height_cells = 320;
  std::size_t channels = 64;
  std::size_t max_points_per_pillar = 32;

  void validate() const;

  static GridConfig vod();
  static GridConfig tj4d();
};

/// One occupied BEV cell.
struct Pillar {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t count = 0;
  std::vector<float> features;  // max_points x feature_dim, zero-padded
};

struct PillarSet {
  std::size_t feature_dim = 0;
  std::size_t max_points = 0;
  std::vector<Pillar> pillars;  // sorted by (row, col)

  std::size_t size() const { return pillars.size(); }
  bool empty() const { return pillars.empty(); }
};

/// Number of decorated features per point: the selected raw columns plus
/// offsets from the pillar mean (3) and from the pillar center (2).
std::size_t decorated_feature_dim(const PointSchema& schema);

/// Groups in-range points into pillars. Points of one pillar are kept in
/// lexicographic order of their raw rows, so the result does not depend on
/// the input order as long as no pillar overflows.
PillarSet pillarize(const RadarPointCloud& cloud, const GridConfig& grid);

/// Point-wise linear layer followed by batch norm (train) or bias (deploy).
struct PfnParams {
  Tensor weight;                         // [C, D]
  std::vector<float> bias;               // deploy only
  std::optional<BatchNormParams> bn;     // train only

  std::size_t out_channels() const { return weight.dim(0); }
  std::size_t in_features() const { return weight.dim(1); }

  /// Reads `pfn.linear.weight` plus either `pfn.bn.*` or `pfn.linear.bias`.
  static PfnParams from_store(const WeightStore& store, std::size_t in_features,
                              std::size_t channels, float bn_eps);
  /// Folds the batch norm into weight and bias.
  PfnParams fused() const;
  std::size_t parameter_count() const;
};

/// One feature vector per pillar: linear, norm, relu, then max over the
/// pillar's real points. Result is [num_pillars, C].
Tensor pfn_forward(const PillarSet& pillars, const PfnParams& params);
Tensor pfn_forward(const PillarSet& pillars, const WeightStore& weights,
                   const GridConfig& grid, float bn_eps = 1e-3f);

/// Writes pillar vectors into a zero [C, H, W] canvas.
Tensor scatter_to_bev(const Tensor& features, const PillarSet& pillars,
                      const GridConfig& grid);

}  // namespace rnx
