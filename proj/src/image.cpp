/* Copyright 2026 The gWaveNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "gwavenet/image.hpp"

#include <algorithm>
#include <cmath>

namespace gwavenet {

Image::Image(std::size_t height, std::size_t width, float fill) : Image(Matrix(height, width, fill)) {}

Image::Image(Matrix pixels) : pixels_(std::move(pixels)) {
  if (pixels_.rows() == 0 || pixels_.cols() == 0) throw ShapeError("image must be at least 1x1");
  for (float v : pixels_.values()) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw ValueError("image pixel " + std::to_string(v) + " outside [0, 1]");
    }
  }
}

Image Image::clamped(const Matrix& pixels) {
  Matrix copy = pixels;
  for (float& v : copy.values()) {
    if (!std::isfinite(v)) throw NumericError("image pixel is not finite");
    v = std::clamp(v, 0.0f, 1.0f);
  }
  return Image(std::move(copy));
}

Tensor Image::as_tensor() const {
  return Tensor(Shape{1, 1, height(), width()}, std::vector<float>(values().begin(), values().end()));
}

}  // namespace gwavenet
