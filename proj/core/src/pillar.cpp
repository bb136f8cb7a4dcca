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

#include "rnx/pillar.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "rnx/error.hpp"

namespace rnx {
namespace {

bool whole_multiple(double span, double step, std::size_t cells) {
  const double ratio = span / step;
  return std::abs(ratio - static_cast<double>(cells)) <= 1e-6 * std::max(1.0, ratio);
}

}  // namespace

void PointSchema::validate() const {
  if (column_names.empty()) throw ConfigError("point schema has no columns");
  std::set<std::string> seen;
  for (const auto& name : column_names) {
    if (!seen.insert(name).second) {
      throw ConfigError("point schema column '" + name + "' appears twice");
    }
  }
  if (selected_columns.empty()) throw ConfigError("point schema selects no columns");
  for (std::size_t idx : selected_columns) {
    if (idx >= column_names.size()) {
      throw ConfigError("selected column " + std::to_string(idx) + " >= column count " +
                        std::to_string(column_names.size()));
    }
  }
}

PointSchema PointSchema::vod() {
  return {{"x", "y", "z", "rcs", "v_r", "v_r_compensated", "time"},
          {0, 1, 2, 3, 4, 5, 6}};
}

PointSchema PointSchema::tj4d() {
  return {{"x", "y", "z", "v_r", "range", "snr", "alpha", "beta"}, {0, 1, 2, 3, 4, 5}};
}

std::size_t RadarPointCloud::size() const {
  const std::size_t f = schema.column_count();
  return f == 0 ? 0 : values.size() / f;
}

std::span<const float> RadarPointCloud::row(std::size_t i) const {
  const std::size_t f = schema.column_count();
  return std::span<const float>(values).subspan(i * f, f);
}

void GridConfig::validate() const {
  if (!(pillar_x > 0 && pillar_y > 0 && pillar_z > 0)) {
    throw ConfigError("pillar sizes must be positive");
  }
  if (!(x_max > x_min && y_max > y_min && z_max > z_min)) {
    throw ConfigError("point cloud range is empty");
  }
  if (width_cells == 0 || height_cells == 0) throw ConfigError("grid extent is zero");
  if (!whole_multiple(x_max - x_min, pillar_x, width_cells)) {
    throw ConfigError("x range / pillar_size_x != grid_w (" +
                      std::to_string((x_max - x_min) / pillar_x) + " vs " +
                      std::to_string(width_cells) + ")");
  }
  if (!whole_multiple(y_max - y_min, pillar_y, height_cells)) {
    throw ConfigError("y range / pillar_size_y != grid_h (" +
                      std::to_string((y_max - y_min) / pillar_y) + " vs " +
                      std::to_string(height_cells) + ")");
  }
  if (std::abs((z_max - z_min) - pillar_z) > 1e-6) {
    throw ConfigError("pillar_size_z must equal the z range (single vertical bin)");
  }
  if (channels == 0) throw ConfigError("pillar channels must be positive");
  if (max_points_per_pillar == 0) throw ConfigError("max_points_per_pillar must be positive");
}

GridConfig GridConfig::vod() { return GridConfig{}; }

GridConfig GridConfig::tj4d() {
  GridConfig g;
  g.pillar_z = 6.0;
  g.x_min = 0.0;
  g.x_max = 69.12;
  g.y_min = -34.56;
  g.y_max = 34.56;
  g.z_min = -4.0;
  g.z_max = 2.0;
  g.width_cells = 432;
  g.height_cells = 432;
  return g;
}

std::size_t decorated_feature_dim(const PointSchema& schema) {
  return schema.selected_columns.size() + 5;
}

PillarSet pillarize(const RadarPointCloud& cloud, const GridConfig& grid) {
  const PointSchema& schema = cloud.schema;
  schema.validate();
  grid.validate();
  const std::size_t f = schema.column_count();
  if (f < 3 || schema.column_names[0] != "x" || schema.column_names[1] != "y" ||
      schema.column_names[2] != "z") {
    throw ConfigError("point schema must start with columns x, y, z");
  }
  if (cloud.values.size() % f != 0) {
    throw ShapeError("point cloud holds " + std::to_string(cloud.values.size()) +
                     " values, not a multiple of row width " + std::to_string(f));
  }

  const std::size_t cap = grid.max_points_per_pillar;
  std::map<std::size_t, std::vector<std::size_t>> cells;  // row*W+col -> points
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.row(i);
    const double x = p[0], y = p[1], z = p[2];
    if (!(x >= grid.x_min && x < grid.x_max && y >= grid.y_min && y < grid.y_max &&
          z >= grid.z_min && z < grid.z_max)) {
      continue;
    }
    const auto col = static_cast<std::size_t>(std::floor((x - grid.x_min) / grid.pillar_x));
    const auto row = static_cast<std::size_t>(std::floor((y - grid.y_min) / grid.pillar_y));
    if (col >= grid.width_cells || row >= grid.height_cells) continue;
    auto& members = cells[row * grid.width_cells + col];
    if (members.size() < cap) members.push_back(i);
  }

  PillarSet out;
  out.feature_dim = decorated_feature_dim(schema);
  out.max_points = cap;
  out.pillars.reserve(cells.size());
  const std::size_t d = out.feature_dim;
  const std::size_t n_sel = schema.selected_columns.size();
  for (auto& [key, members] : cells) {
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      const auto ra = cloud.row(a), rb = cloud.row(b);
      return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    });
    Pillar pillar;
    pillar.row = key / grid.width_cells;
    pillar.col = key % grid.width_cells;
    pillar.count = members.size();
    pillar.features.assign(cap * d, 0.0f);

    double mean[3] = {0.0, 0.0, 0.0};
    for (std::size_t idx : members) {
      const auto p = cloud.row(idx);
      for (int a = 0; a < 3; ++a) mean[a] += p[a];
    }
    for (double& m : mean) m /= static_cast<double>(members.size());
    const double center_x = grid.x_min + (static_cast<double>(pillar.col) + 0.5) * grid.pillar_x;
    const double center_y = grid.y_min + (static_cast<double>(pillar.row) + 0.5) * grid.pillar_y;

    for (std::size_t k = 0; k < members.size(); ++k) {
      const auto p = cloud.row(members[k]);
      float* dst = pillar.features.data() + k * d;
      for (std::size_t s = 0; s < n_sel; ++s) dst[s] = p[schema.selected_columns[s]];
      dst[n_sel + 0] = static_cast<float>(p[0] - mean[0]);
      dst[n_sel + 1] = static_cast<float>(p[1] - mean[1]);
      dst[n_sel + 2] = static_cast<float>(p[2] - mean[2]);
      dst[n_sel + 3] = static_cast<float>(p[0] - center_x);
      dst[n_sel + 4] = static_cast<float>(p[1] - center_y);
    }
    out.pillars.push_back(std::move(pillar));
  }
  return out;
}

PfnParams PfnParams::from_store(const WeightStore& store, std::size_t in_features,
                                std::size_t channels, float bn_eps) {
  PfnParams p;
  p.weight = store.require("pfn.linear.weight", {channels, in_features});
  if (store.contains("pfn.bn.gamma")) {
    BatchNormParams bn;
    bn.gamma = store.require_vector("pfn.bn.gamma", channels);
    bn.beta = store.require_vector("pfn.bn.beta", channels);
    bn.running_mean = store.require_vector("pfn.bn.running_mean", channels);
    bn.running_var = store.require_vector("pfn.bn.running_var", channels);
    bn.eps = bn_eps;
    bn.validate();
    p.bn = std::move(bn);
  } else if (store.contains("pfn.linear.bias")) {
    p.bias = store.require_vector("pfn.linear.bias", channels);
  } else {
    throw WeightError("missing weight entry 'pfn.bn.gamma' (or 'pfn.linear.bias' for deploy weights)");
  }
  return p;
}

PfnParams PfnParams::fused() const {
  if (!bn) return *this;
  PfnParams out;
  const std::size_t c = out_channels(), d = in_features();
  std::vector<float> w(c * d);
  out.bias.resize(c);
  for (std::size_t o = 0; o < c; ++o) {
    const double scale = bn->gamma[o] / std::sqrt(static_cast<double>(bn->running_var[o]) + bn->eps);
    for (std::size_t i = 0; i < d; ++i) {
      w[o * d + i] = static_cast<float>(weight[o * d + i] * scale);
    }
    const double b = bias.empty() ? 0.0 : bias[o];
    out.bias[o] = static_cast<float>(bn->beta[o] + (b - bn->running_mean[o]) * scale);
  }
  out.weight = Tensor({c, d}, std::move(w));
  return out;
}

std::size_t PfnParams::parameter_count() const {
  return weight.numel() + bias.size() + (bn ? 4 * bn->channels() : 0);
}

Tensor pfn_forward(const PillarSet& pillars, const PfnParams& params) {
  const std::size_t c = params.out_channels();
  const std::size_t d = params.in_features();
  if (pillars.feature_dim != d) {
    throw ShapeError("pfn: pillar features have " + std::to_string(pillars.feature_dim) +
                     " dims, linear layer expects " + std::to_string(d));
  }
  std::vector<double> scale(c, 1.0), shift(c, 0.0);
  for (std::size_t o = 0; o < c; ++o) {
    const double b = params.bias.empty() ? 0.0 : params.bias[o];
    if (params.bn) {
      const auto& bn = *params.bn;
      scale[o] = bn.gamma[o] / std::sqrt(static_cast<double>(bn.running_var[o]) + bn.eps);
      shift[o] = bn.beta[o] + (b - bn.running_mean[o]) * scale[o];
    } else {
      shift[o] = b;
    }
  }
  const auto w = params.weight.data();
  Tensor out({pillars.size(), c});
  for (std::size_t p = 0; p < pillars.size(); ++p) {
    const Pillar& pillar = pillars.pillars[p];
    for (std::size_t o = 0; o < c; ++o) {
      float best = 0.0f;
      for (std::size_t k = 0; k < pillar.count; ++k) {
        const float* f = pillar.features.data() + k * d;
        double acc = 0.0;
        for (std::size_t i = 0; i < d; ++i) acc += static_cast<double>(w[o * d + i]) * f[i];
        float v;
        if (params.bn) {
          // Same arithmetic as batch_norm_inference on the linear output.
          const auto lin = static_cast<float>(acc);
          const auto& bn = *params.bn;
          v = static_cast<float>((static_cast<double>(lin) - bn.running_mean[o]) * scale[o] +
                                 bn.beta[o]);
        } else {
          v = static_cast<float>(acc + shift[o]);
        }
        v = std::max(v, 0.0f);
        best = k == 0 ? v : std::max(best, v);
      }
      out[p * c + o] = best;
    }
  }
  return out;
}

Tensor pfn_forward(const PillarSet& pillars, const WeightStore& weights,
                   const GridConfig& grid, float bn_eps) {
  return pfn_forward(pillars, PfnParams::from_store(weights, pillars.feature_dim,
                                                    grid.channels, bn_eps));
}

Tensor scatter_to_bev(const Tensor& features, const PillarSet& pillars,
                      const GridConfig& grid) {
  const std::size_t c = grid.channels;
  if (features.rank() != 2 || features.dim(0) != pillars.size() || features.dim(1) != c) {
    throw ShapeError("scatter_to_bev: features " + shape_to_string(features.shape()) +
                     " do not match " + std::to_string(pillars.size()) + " pillars x " +
                     std::to_string(c) + " channels");
  }
  Tensor bev({c, grid.height_cells, grid.width_cells});
  std::vector<bool> used(grid.height_cells * grid.width_cells, false);
  for (std::size_t p = 0; p < pillars.size(); ++p) {
    const Pillar& pillar = pillars.pillars[p];
    if (pillar.row >= grid.height_cells || pillar.col >= grid.width_cells) {
      throw ShapeError("scatter_to_bev: pillar cell (" + std::to_string(pillar.row) + ", " +
                       std::to_string(pillar.col) + ") outside the grid");
    }
    const std::size_t cell = pillar.row * grid.width_cells + pillar.col;
    if (used[cell]) {
      throw ShapeError("scatter_to_bev: duplicate pillar cell (" + std::to_string(pillar.row) +
                       ", " + std::to_string(pillar.col) + ")");
    }
    used[cell] = true;
    for (std::size_t ch = 0; ch < c; ++ch) {
      bev.at(ch, pillar.row, pillar.col) = features[p * c + ch];
    }
  }
  return bev;
}

}  // namespace rnx
