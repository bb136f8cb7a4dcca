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

#include <vector>

#include "rnx/config.hpp"
#include "rnx/geometry.hpp"
#include "rnx/graph.hpp"

namespace rnx {

/// Heatmap peaks decoded to boxes, then class-wise NMS.
std::vector<Detection> postprocess(const HeadOutput& head, const GridConfig& grid,
                                   const RuntimeOptions& runtime);

std::vector<Detection> detect(const Detector& detector, const RadarPointCloud& cloud,
                              const RuntimeOptions& runtime);

}  // namespace rnx
