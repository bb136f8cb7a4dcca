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

#include "rnx/dcn.hpp"

#include <algorithm>
#include <cmath>

#include "rnx/error.hpp"
#include "rnx/ops.hpp"

namespace rnx {
namespace {

std::size_t kernel_side(std::size_t points) {
  const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(points))));
  if (points == 0 || side * side != points || side % 2 == 0) {
    throw ShapeError("dcnv3: sampling points " + std::to_string(points) +
                     " is not the square of an odd kernel size");
  }
  return side;
}

void require_shape(const Tensor& t, const Shape& expected, const char* what) {
  if (t.shape() != expected) {
    throw ShapeError(std::string("dcnv3: ") + what + " has shape " + shape_to_string(t.shape()) +
                     ", expected " + shape_to_string(expected));
  }
}

void require_length(const std::vector<float>& v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw ShapeError(std::string("dcnv3: ") + what + " has length " + std::to_string(v.size()) +
                     ", expected " + std::to_string(n));
  }
}

// Bilinear corner indices and weights of one sampling location; index -1
// marks a padding neighbour.
struct Corners {
  std::ptrdiff_t idx[4];
  double weight[4];
};

Corners corners_at(double x, double y, std::size_t height, std::size_t width) {
  Corners c{};
  const double fx = std::floor(x), fy = std::floor(y);
  const double lx = x - fx, ly = y - fy;
  const double w[4] = {(1 - ly) * (1 - lx), (1 - ly) * lx, ly * (1 - lx), ly * lx};
  const bool far = fx < -1.0 || fy < -1.0 || fx > static_cast<double>(width) ||
                   fy > static_cast<double>(height);
  const auto x0 = far ? std::ptrdiff_t{-2} : static_cast<std::ptrdiff_t>(fx);
  const auto y0 = far ? std::ptrdiff_t{-2} : static_cast<std::ptrdiff_t>(fy);
  const std::ptrdiff_t xs[4] = {x0, x0 + 1, x0, x0 + 1};
  const std::ptrdiff_t ys[4] = {y0, y0, y0 + 1, y0 + 1};
  for (int i = 0; i < 4; ++i) {
    const bool inside = xs[i] >= 0 && ys[i] >= 0 && xs[i] < static_cast<std::ptrdiff_t>(width) &&
                        ys[i] < static_cast<std::ptrdiff_t>(height);
    c.idx[i] = inside ? ys[i] * static_cast<std::ptrdiff_t>(width) + xs[i] : -1;
    c.weight[i] = inside ? w[i] : 0.0;
  }
  return c;
}

}  // namespace

std::vector<std::pair<int, int>> dcn_base_taps(std::size_t points) {
  const auto side = static_cast<int>(kernel_side(points));
  const int half = side / 2;
  std::vector<std::pair<int, int>> taps;
  taps.reserve(points);
  for (int dy = -half; dy <= half; ++dy) {
    for (int dx = -half; dx <= half; ++dx) taps.emplace_back(dy, dx);
  }
  return taps;
}

void DcnV3Params::validate() const {
  kernel_side(points);
  if (input_proj_weight.rank() != 4) throw ShapeError("dcnv3: input projection must be rank 4");
  const std::size_t c = channels();
  if (groups == 0 || c % groups != 0) {
    throw ShapeError("dcnv3: channels " + std::to_string(c) + " not divisible by groups " +
                     std::to_string(groups));
  }
  const std::size_t nk = groups * points;
  require_shape(input_proj_weight, {c, c, 1, 1}, "input projection");
  require_shape(output_proj_weight, {c, c, 1, 1}, "output projection");
  require_shape(offset_weight, {2 * nk, c, 3, 3}, "offset kernel");
  require_shape(modulation_weight, {nk, c, 3, 3}, "modulation kernel");
  require_length(input_proj_bias, c, "input projection bias");
  require_length(output_proj_bias, c, "output projection bias");
  require_length(offset_bias, 2 * nk, "offset bias");
  require_length(modulation_bias, nk, "modulation bias");
}

std::size_t DcnV3Params::parameter_count() const {
  return input_proj_weight.numel() + input_proj_bias.size() + output_proj_weight.numel() +
         output_proj_bias.size() + offset_weight.numel() + offset_bias.size() +
         modulation_weight.numel() + modulation_bias.size();
}

std::size_t dcnv3_param_count(std::size_t channels, std::size_t groups, std::size_t points) {
  const std::size_t nk = groups * points;
  return 2 * (channels * channels + channels) + (2 * nk * channels * 9 + 2 * nk) +
         (nk * channels * 9 + nk);
}

std::pair<Tensor, Tensor> compute_offsets_modulation(const Tensor& x, const DcnV3Params& p) {
  p.validate();
  if (x.rank() != 3 || x.dim(0) != p.channels()) {
    throw ShapeError("dcnv3: input " + shape_to_string(x.shape()) + " does not have " +
                     std::to_string(p.channels()) + " channels");
  }
  Tensor offsets = conv2d(x, p.offset_weight, p.offset_bias, {.stride = 1, .padding = 1});
  Tensor logits = conv2d(x, p.modulation_weight, p.modulation_bias, {.stride = 1, .padding = 1});
  const std::size_t plane = x.dim(1) * x.dim(2);
  const std::size_t k_n = p.points;
  std::vector<double> e(k_n);
  for (std::size_t n = 0; n < p.groups; ++n) {
    for (std::size_t i = 0; i < plane; ++i) {
      double peak = -INFINITY;
      for (std::size_t k = 0; k < k_n; ++k) {
        peak = std::max(peak, static_cast<double>(logits[(n * k_n + k) * plane + i]));
      }
      double total = 0.0;
      for (std::size_t k = 0; k < k_n; ++k) {
        e[k] = std::exp(static_cast<double>(logits[(n * k_n + k) * plane + i]) - peak);
        total += e[k];
      }
      for (std::size_t k = 0; k < k_n; ++k) {
        logits[(n * k_n + k) * plane + i] = static_cast<float>(e[k] / total);
      }
    }
  }
  return {std::move(offsets), std::move(logits)};
}

Tensor dcnv3_aggregate(const Tensor& projected, const Tensor& offsets, const Tensor& modulation,
                       std::size_t groups, std::size_t points) {
  const std::size_t c = projected.dim(0), h = projected.dim(1), w = projected.dim(2);
  const std::size_t nk = groups * points;
  if (groups == 0 || c % groups != 0) {
    throw ShapeError("dcnv3: channels " + std::to_string(c) + " not divisible by groups " +
                     std::to_string(groups));
  }
  require_shape(offsets, {2 * nk, h, w}, "offsets");
  require_shape(modulation, {nk, h, w}, "modulation");
  const auto taps = dcn_base_taps(points);
  const std::size_t per_group = c / groups;
  const std::size_t plane = h * w;

  Tensor out({c, h, w});
  std::vector<Corners> corners(points);
  std::vector<double> mods(points);
  for (std::size_t n = 0; n < groups; ++n) {
    for (std::size_t row = 0; row < h; ++row) {
      for (std::size_t col = 0; col < w; ++col) {
        const std::size_t pos = row * w + col;
        for (std::size_t k = 0; k < points; ++k) {
          const std::size_t ch = n * points + k;
          const double sx = static_cast<double>(col) + taps[k].second + offsets[(2 * ch) * plane + pos];
          const double sy = static_cast<double>(row) + taps[k].first + offsets[(2 * ch + 1) * plane + pos];
          corners[k] = corners_at(sx, sy, h, w);
          mods[k] = modulation[ch * plane + pos];
        }
        for (std::size_t cg = 0; cg < per_group; ++cg) {
          const std::size_t ch = n * per_group + cg;
          const float* src = projected.data().data() + ch * plane;
          double acc = 0.0;
          for (std::size_t k = 0; k < points; ++k) {
            const Corners& cr = corners[k];
            double v = 0.0;
            for (int i = 0; i < 4; ++i) {
              if (cr.idx[i] >= 0) v += cr.weight[i] * src[cr.idx[i]];
            }
            acc += mods[k] * v;
          }
          out[ch * plane + pos] = static_cast<float>(acc);
        }
      }
    }
  }
  return out;
}

Tensor dcnv3_forward(const Tensor& x, const DcnV3Params& p) {
  auto [offsets, modulation] = compute_offsets_modulation(x, p);
  const Tensor projected = conv2d(x, p.input_proj_weight, p.input_proj_bias, {});
  const Tensor agg = dcnv3_aggregate(projected, offsets, modulation, p.groups, p.points);
  return conv2d(agg, p.output_proj_weight, p.output_proj_bias, {});
}

DcnV3Params load_dcnv3(const WeightStore& store, const std::string& prefix,
                       std::size_t channels, std::size_t groups, std::size_t points) {
  const std::size_t nk = groups * points;
  DcnV3Params p;
  p.groups = groups;
  p.points = points;
  p.input_proj_weight = store.require(prefix + ".input_proj.weight", {channels, channels, 1, 1});
  p.input_proj_bias = store.require_vector(prefix + ".input_proj.bias", channels);
  p.output_proj_weight = store.require(prefix + ".output_proj.weight", {channels, channels, 1, 1});
  p.output_proj_bias = store.require_vector(prefix + ".output_proj.bias", channels);
  p.offset_weight = store.require(prefix + ".offset.weight", {2 * nk, channels, 3, 3});
  p.offset_bias = store.require_vector(prefix + ".offset.bias", 2 * nk);
  p.modulation_weight = store.require(prefix + ".modulation.weight", {nk, channels, 3, 3});
  p.modulation_bias = store.require_vector(prefix + ".modulation.bias", nk);
  p.validate();
  return p;
}

}  // namespace rnx
