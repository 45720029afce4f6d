// Copyright 2026 The bevprompt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <string>

#include "bevprompt/errors.hpp"
#include "bevprompt/scene.hpp"

namespace bevprompt {

DepthImage depth_from_raw(const Gray16Image& raw, const FrameRecord& frame, double depth_scale) {
  if (!(depth_scale > 0.0)) throw Error(ErrorKind::kValidation, "depth_scale must be > 0");
  if (raw.width != frame.width || raw.height != frame.height) {
    throw Error(ErrorKind::kDimensionMismatch,
                "depth image is " + std::to_string(raw.width) + "x" + std::to_string(raw.height) + " but frame " +
                    std::to_string(frame.frame_index) + " declares " + std::to_string(frame.width) + "x" +
                    std::to_string(frame.height));
  }
  DepthImage depth(raw.width, raw.height);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      const std::uint16_t value = raw.values[static_cast<std::size_t>(y) * raw.width + x];
      depth.set(x, y, value == 0 ? 0.0f : static_cast<float>(value * depth_scale));
    }
  }
  return depth;
}

DepthImage load_depth(const FrameRecord& frame, double depth_scale) {
  return depth_from_raw(read_png_gray16(frame.depth_path), frame, depth_scale);
}

}  // namespace bevprompt
