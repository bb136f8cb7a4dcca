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


#include "rnx/pipeline.hpp"

namespace rnx {

std::vector<Detection> postprocess(const HeadOutput& head, const GridConfig& grid,
                                   const RuntimeOptions& runtime) {
  return nms(decode_detections(head, grid, runtime.score_threshold, runtime.top_k),
             runtime.nms_iou_threshold);
}

std::vector<Detection> detect(const Detector& detector, const RadarPointCloud& cloud,
                              const RuntimeOptions& runtime) {
  return postprocess(detector.forward(cloud), detector.config().grid, runtime);
}

}  // namespace rnx
