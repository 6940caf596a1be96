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

#include <string>
#include <string_view>

#include "gwavenet/error.hpp"

namespace gwavenet {

/// Patch class. gw (gravity waves present) is the positive class.
enum class Label { kGw, kNgw };

inline std::string_view to_string(Label label) { return label == Label::kGw ? "gw" : "ngw"; }

inline Label label_from_string(std::string_view s) {
  if (s == "gw") return Label::kGw;
  if (s == "ngw") return Label::kNgw;
  throw ValueError("unknown label '" + std::string(s) + "' (expected gw or ngw)");
}

/// BCE target: 1 for gw, 0 for ngw.
inline float label_target(Label label) { return label == Label::kGw ? 1.0f : 0.0f; }

}  // namespace gwavenet
