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

#include <filesystem>
#include <iosfwd>

#include "gwavenet/tensor.hpp"

namespace gwavenet {

/// Raw tensor exchange format:
///
///   bytes 0..3   magic "GWT1"
///   bytes 4..19  n, c, h, w as little-endian uint32
///   then         n*c*h*w little-endian IEEE-754 float32 values, row-major
///
/// The header is 20 bytes: a 4-byte magic followed by four 4-byte dimensions.
inline constexpr char kTensorMagic[4] = {'G', 'W', 'T', '1'};
inline constexpr std::size_t kTensorHeaderBytes = 20;

void write_tensor(std::ostream& os, const Tensor& t);
/// Throws FormatError on bad magic, truncated data or non-finite values.
Tensor read_tensor(std::istream& is);

void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

}  // namespace gwavenet
