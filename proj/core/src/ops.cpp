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

#include "rnx/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rnx/error.hpp"

namespace rnx {
namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + " must have rank " +
                     std::to_string(rank) + ", got shape " +
                     shape_to_string(t.shape()));
  }
}

std::size_t out_extent(std::size_t in, std::size_t k, std::size_t stride,
                       std::size_t pad, const char* axis) {
  if (in + 2 * pad < k) {
    throw ShapeError(std::string("conv2d: padded ") + axis + " extent " +
                     std::to_string(in + 2 * pad) + " smaller than kernel " +
                     std::to_string(k));
  }
  return (in + 2 * pad - k) / stride + 1;
}

// Accumulates one kernel plane into `acc` for every output position.
// Fixed order: callers loop input channel, then kh, then kw.
void accumulate_tap(std::span<const float> in_plane, std::size_t in_h,
                    std::size_t in_w, float weight, std::size_t kh,
                    std::size_t kw, std::size_t out_h, std::size_t out_w,
                    std::size_t stride, std::size_t pad, std::vector<double>& acc) {
  if (weight == 0.0f) {
    // Adding 0.0 * finite leaves every accumulator bit-identical.
    return;
  }
  const double w = weight;
  // Valid output column range: 0 <= ow*stride + kw - pad < in_w.
  std::size_t ow_lo = 0;
  if (kw < pad) ow_lo = (pad - kw + stride - 1) / stride;
  std::size_t ow_hi = 0;
  if (in_w + pad > kw) ow_hi = std::min(out_w, (in_w + pad - kw - 1) / stride + 1);
  if (ow_lo >= ow_hi) return;
  for (std::size_t oh = 0; oh < out_h; ++oh) {
    const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * stride + kh) -
                              static_cast<std::ptrdiff_t>(pad);
    if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(in_h)) continue;
    const float* row = in_plane.data() + static_cast<std::size_t>(ih) * in_w;
    double* out_row = acc.data() + oh * out_w;
    if (stride == 1) {
      const float* src = row + (ow_lo + kw - pad);
      for (std::size_t ow = ow_lo; ow < ow_hi; ++ow) {
        out_row[ow] += w * static_cast<double>(*src++);
      }
    } else {
      for (std::size_t ow = ow_lo; ow < ow_hi; ++ow) {
        out_row[ow] += w * static_cast<double>(row[ow * stride + kw - pad]);
      }
    }
  }
}

void check_bias(std::span<const float> bias, std::size_t cout, const char* op) {
  if (!bias.empty() && bias.size() != cout) {
    throw ShapeError(std::string(op) + ": bias length " +
                     std::to_string(bias.size()) + " != output channels " +
                     std::to_string(cout));
  }
}

}  // namespace

void BatchNormParams::validate() const {
  const std::size_t c = gamma.size();
  if (beta.size() != c || running_mean.size() != c || running_var.size() != c) {
    throw ShapeError("batch norm vectors have unequal lengths (gamma " +
                     std::to_string(c) + ", beta " + std::to_string(beta.size()) +
                     ", mean " + std::to_string(running_mean.size()) + ", var " +
                     std::to_string(running_var.size()) + ")");
  }
  for (std::size_t i = 0; i < c; ++i) {
    if (!(running_var[i] >= 0.0f)) {
      throw Error("batch norm running_var[" + std::to_string(i) +
                  "] is negative");
    }
    if (!(static_cast<double>(running_var[i]) + eps > 0.0)) {
      throw Error("batch norm running_var[" + std::to_string(i) +
                  "] + eps is not positive");
    }
  }
}

BatchNormParams BatchNormParams::identity(std::size_t channels, float eps) {
  return BatchNormParams{std::vector<float>(channels, 1.0f),
                         std::vector<float>(channels, 0.0f),
                         std::vector<float>(channels, 0.0f),
                         std::vector<float>(channels, 1.0f), eps};
}

Tensor conv2d(const Tensor& input, const Tensor& kernel,
              std::span<const float> bias, const Conv2dOptions& options) {
  require_rank(input, 3, "conv2d input");
  require_rank(kernel, 4, "conv2d kernel");
  const std::size_t groups = options.groups;
  const std::size_t stride = options.stride;
  if (groups == 0 || stride == 0) {
    throw ShapeError("conv2d: stride and groups must be positive");
  }
  const std::size_t cin = input.dim(0), in_h = input.dim(1), in_w = input.dim(2);
  const std::size_t cout = kernel.dim(0), kcin = kernel.dim(1);
  const std::size_t kh_n = kernel.dim(2), kw_n = kernel.dim(3);
  if (cin % groups != 0) {
    throw ShapeError("conv2d: input channels " + std::to_string(cin) +
                     " not divisible by groups " + std::to_string(groups));
  }
  if (cout % groups != 0) {
    throw ShapeError("conv2d: output channels " + std::to_string(cout) +
                     " not divisible by groups " + std::to_string(groups));
  }
  if (kcin != cin / groups) {
    throw ShapeError("conv2d: kernel input channels " + std::to_string(kcin) +
                     " != input channels / groups " + std::to_string(cin / groups));
  }
  check_bias(bias, cout, "conv2d");
  const std::size_t out_h = out_extent(in_h, kh_n, stride, options.padding, "height");
  const std::size_t out_w = out_extent(in_w, kw_n, stride, options.padding, "width");

  Tensor out({cout, out_h, out_w});
  std::vector<double> acc(out_h * out_w);
  const std::size_t cout_per_group = cout / groups;
  const auto k = kernel.data();
  for (std::size_t oc = 0; oc < cout; ++oc) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const std::size_t g = oc / cout_per_group;
    for (std::size_t icg = 0; icg < kcin; ++icg) {
      const std::size_t ic = g * kcin + icg;
      const auto plane = input.channel(ic);
      for (std::size_t kh = 0; kh < kh_n; ++kh) {
        for (std::size_t kw = 0; kw < kw_n; ++kw) {
          const float wv = k[((oc * kcin + icg) * kh_n + kh) * kw_n + kw];
          accumulate_tap(plane, in_h, in_w, wv, kh, kw, out_h, out_w, stride,
                         options.padding, acc);
        }
      }
    }
    const double b = bias.empty() ? 0.0 : static_cast<double>(bias[oc]);
    auto dst = out.channel(oc);
    for (std::size_t i = 0; i < acc.size(); ++i) {
      dst[i] = static_cast<float>(acc[i] + b);
    }
  }
  return out;
}

Tensor depthwise_conv2d(const Tensor& input, const Tensor& kernel,
                        std::span<const float> bias, std::size_t stride,
                        std::size_t padding) {
  require_rank(input, 3, "depthwise_conv2d input");
  require_rank(kernel, 4, "depthwise_conv2d kernel");
  const std::size_t c = input.dim(0), in_h = input.dim(1), in_w = input.dim(2);
  if (kernel.dim(0) != c || kernel.dim(1) != 1) {
    throw ShapeError("depthwise_conv2d: kernel " + shape_to_string(kernel.shape()) +
                     " does not match " + std::to_string(c) + " input channels");
  }
  if (stride == 0) throw ShapeError("depthwise_conv2d: stride must be positive");
  check_bias(bias, c, "depthwise_conv2d");
  const std::size_t kh_n = kernel.dim(2), kw_n = kernel.dim(3);
  const std::size_t out_h = out_extent(in_h, kh_n, stride, padding, "height");
  const std::size_t out_w = out_extent(in_w, kw_n, stride, padding, "width");

  Tensor out({c, out_h, out_w});
  std::vector<double> acc(out_h * out_w);
  const auto k = kernel.data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const auto plane = input.channel(ch);
    for (std::size_t kh = 0; kh < kh_n; ++kh) {
      for (std::size_t kw = 0; kw < kw_n; ++kw) {
        accumulate_tap(plane, in_h, in_w, k[(ch * kh_n + kh) * kw_n + kw], kh, kw,
                       out_h, out_w, stride, padding, acc);
      }
    }
    const double b = bias.empty() ? 0.0 : static_cast<double>(bias[ch]);
    auto dst = out.channel(ch);
    for (std::size_t i = 0; i < acc.size(); ++i) {
      dst[i] = static_cast<float>(acc[i] + b);
    }
  }
  return out;
}

Tensor batch_norm_inference(const Tensor& x, const BatchNormParams& bn) {
  require_rank(x, 3, "batch_norm input");
  bn.validate();
  if (bn.channels() != x.dim(0)) {
    throw ShapeError("batch_norm: " + std::to_string(bn.channels()) +
                     " statistics for " + std::to_string(x.dim(0)) + " channels");
  }
  Tensor out = x;
  for (std::size_t c = 0; c < x.dim(0); ++c) {
    const double inv_std =
        1.0 / std::sqrt(static_cast<double>(bn.running_var[c]) + bn.eps);
    const double scale = inv_std * bn.gamma[c];
    const double mean = bn.running_mean[c];
    const double beta = bn.beta[c];
    for (float& v : out.channel(c)) {
      v = static_cast<float>((static_cast<double>(v) - mean) * scale + beta);
    }
  }
  return out;
}

Tensor relu(Tensor x) {
  for (float& v : x.data()) v = std::max(v, 0.0f);
  return x;
}

Tensor sigmoid(Tensor x) {
  for (float& v : x.data()) {
    v = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
  }
  return x;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
  Tensor out = a;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b[i];
  return out;
}

Tensor transpose_conv2d(const Tensor& input, const Tensor& kernel,
                        std::span<const float> bias, std::size_t kernel_size,
                        std::size_t stride) {
  if (kernel_size != 2 || stride != 2) {
    throw ShapeError("transpose_conv2d: only kernel 2 with stride 2 is supported, got kernel " +
                     std::to_string(kernel_size) + " stride " + std::to_string(stride));
  }
  require_rank(input, 3, "transpose_conv2d input");
  require_rank(kernel, 4, "transpose_conv2d kernel");
  const std::size_t cin = input.dim(0), in_h = input.dim(1), in_w = input.dim(2);
  if (kernel.dim(0) != cin || kernel.dim(2) != 2 || kernel.dim(3) != 2) {
    throw ShapeError("transpose_conv2d: kernel " + shape_to_string(kernel.shape()) +
                     " incompatible with " + std::to_string(cin) + " input channels");
  }
  const std::size_t cout = kernel.dim(1);
  check_bias(bias, cout, "transpose_conv2d");
  const std::size_t out_h = in_h * 2, out_w = in_w * 2;
  Tensor out({cout, out_h, out_w});
  std::vector<double> acc(out_h * out_w);
  const auto k = kernel.data();
  for (std::size_t oc = 0; oc < cout; ++oc) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t ic = 0; ic < cin; ++ic) {
      const auto plane = input.channel(ic);
      const std::size_t base = (ic * cout + oc) * 4;
      const double k00 = k[base], k01 = k[base + 1], k10 = k[base + 2], k11 = k[base + 3];
      for (std::size_t i = 0; i < in_h; ++i) {
        double* top = acc.data() + (2 * i) * out_w;
        double* bottom = top + out_w;
        const float* row = plane.data() + i * in_w;
        for (std::size_t j = 0; j < in_w; ++j) {
          const double v = row[j];
          top[2 * j] += v * k00;
          top[2 * j + 1] += v * k01;
          bottom[2 * j] += v * k10;
          bottom[2 * j + 1] += v * k11;
        }
      }
    }
    const double b = bias.empty() ? 0.0 : static_cast<double>(bias[oc]);
    auto dst = out.channel(oc);
    for (std::size_t i = 0; i < acc.size(); ++i) {
      dst[i] = static_cast<float>(acc[i] + b);
    }
  }
  return out;
}

float bilinear_sample_plane(std::span<const float> plane, std::size_t height,
                            std::size_t width, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const double lx = x - fx;
  const double ly = y - fy;
  // Far outside the plane: every neighbour is padding.
  if (fx < -1.0 || fy < -1.0 || fx > static_cast<double>(width) ||
      fy > static_cast<double>(height)) {
    return 0.0f;
  }
  const auto x0 = static_cast<std::ptrdiff_t>(fx);
  const auto y0 = static_cast<std::ptrdiff_t>(fy);
  const auto h = static_cast<std::ptrdiff_t>(height);
  const auto w = static_cast<std::ptrdiff_t>(width);
  auto value = [&](std::ptrdiff_t r, std::ptrdiff_t c) -> double {
    if (r < 0 || r >= h || c < 0 || c >= w) return 0.0;
    return plane[static_cast<std::size_t>(r * w + c)];
  };
  const double top = (1.0 - lx) * value(y0, x0) + lx * value(y0, x0 + 1);
  const double bottom = (1.0 - lx) * value(y0 + 1, x0) + lx * value(y0 + 1, x0 + 1);
  return static_cast<float>((1.0 - ly) * top + ly * bottom);
}

std::vector<float> bilinear_sample(const Tensor& feature, double x, double y) {
  require_rank(feature, 3, "bilinear_sample feature");
  std::vector<float> out(feature.dim(0));
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c] = bilinear_sample_plane(feature.channel(c), feature.dim(1),
                                   feature.dim(2), x, y);
  }
  return out;
}

Tensor concat_channels(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  std::size_t channels = 0;
  for (const Tensor& p : parts) {
    require_rank(p, 3, "concat_channels input");
    if (p.dim(1) != parts[0].dim(1) || p.dim(2) != parts[0].dim(2)) {
      throw ShapeError("concat_channels: spatial extents differ, " +
                       shape_to_string(parts[0].shape()) + " vs " +
                       shape_to_string(p.shape()));
    }
    channels += p.dim(0);
  }
  std::vector<float> data;
  data.reserve(channels * parts[0].dim(1) * parts[0].dim(2));
  for (const Tensor& p : parts) {
    data.insert(data.end(), p.data().begin(), p.data().end());
  }
  return Tensor({channels, parts[0].dim(1), parts[0].dim(2)}, std::move(data));
}

Tensor slice_channels(const Tensor& x, std::size_t begin, std::size_t count) {
  require_rank(x, 3, "slice_channels input");
  if (begin + count > x.dim(0)) {
    throw ShapeError("slice_channels: range [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") exceeds " +
                     std::to_string(x.dim(0)) + " channels");
  }
  const std::size_t plane = x.dim(1) * x.dim(2);
  std::vector<float> data(x.data().begin() + static_cast<std::ptrdiff_t>(begin * plane),
                          x.data().begin() +
                              static_cast<std::ptrdiff_t>((begin + count) * plane));
  return Tensor({count, x.dim(1), x.dim(2)}, std::move(data));
}

}  // namespace rnx
