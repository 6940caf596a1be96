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

#pragma once

#include <cstddef>

#include "gwavenet/tensor.hpp"

namespace gwavenet {

/// Normalized grayscale image; every pixel lies in [0, 1].
class Image {
 public:
  Image() = default;
  Image(std::size_t height, std::size_t width, float fill = 0.0f);
  /// Throws ValueError if any pixel is outside [0, 1] or non-finite.
  explicit Image(Matrix pixels);

  /// Clamps into [0, 1] instead of rejecting; non-finite values still throw.
  static Image clamped(const Matrix& pixels);

  std::size_t height() const { return pixels_.rows(); }
  std::size_t width() const { return pixels_.cols(); }
  float operator()(std::size_t y, std::size_t x) const { return pixels_(y, x); }
  const Matrix& pixels() const { return pixels_; }
  std::span<const float> values() const { return pixels_.values(); }

  /// [1, 1, h, w] tensor holding the same pixels.
  Tensor as_tensor() const;

  bool operator==(const Image&) const = default;

 private:
  Matrix pixels_;
};

}  // namespace gwavenet
