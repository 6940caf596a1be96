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

#include <iosfwd>

namespace gwavenet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Parses and runs one command (gen-data, train, eval, filter, kernel,
/// repeat). Returns kExitOk, kExitUsage for bad flags or inconsistent
/// settings, or kExitData when data, checkpoints or numerics fail.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gwavenet::cli
