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

#include "rnx/init.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace rnx {
namespace {

class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : gen_(seed) {}

  // std::uniform_real_distribution is implementation defined, so map bits by hand.
  double operator()(double lo, double hi) {
    const double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace

WeightStore init_random_weights(const GraphConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Uniform uniform(seed);
  WeightStore store;
  for (const ParamSpec& spec : parameter_manifest(cfg)) {
    const double fan_in = static_cast<double>(std::max<std::size_t>(spec.fan_in, 1));
    std::vector<float> values(shape_numel(spec.shape));
    for (float& v : values) {
      double x = 0.0;
      switch (spec.role) {
        case ParamRole::kWeight: {
          const double b = std::sqrt(3.0 / fan_in);
          x = uniform(-b, b);
          break;
        }
        case ParamRole::kBias: {
          const double b = 1.0 / std::sqrt(fan_in);
          x = uniform(-b, b);
          break;
        }
        case ParamRole::kBnGamma: x = uniform(0.5, 1.0); break;
        case ParamRole::kBnBeta: x = uniform(-0.1, 0.1); break;
        case ParamRole::kBnMean: x = uniform(-0.1, 0.1); break;
        case ParamRole::kBnVar: x = uniform(0.5, 1.5); break;
      }
      v = static_cast<float>(x);
    }
    if (spec.name == "head.cls.bias") std::fill(values.begin(), values.end(), -2.19f);
    store.insert(spec.name, Tensor(spec.shape, std::move(values)));
  }
  return store;
}

}  // namespace rnx
