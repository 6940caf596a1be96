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

#include "gwavenet/image.hpp"

namespace gwavenet {

/// Binary (P5) PGM with maxval up to 65535; pixels map linearly onto [0, 1].
Image read_pgm(const std::filesystem::path& path);

/// Writes 8-bit (maxval 255) or 16-bit (maxval 65535, big-endian) P5.
void write_pgm(const std::filesystem::path& path, const Image& img, unsigned maxval = 255);

}  // namespace gwavenet
