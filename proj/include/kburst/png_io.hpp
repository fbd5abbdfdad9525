// Copyright 2026 The kburst Authors
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

#pragma once

#include <string>

#include "kburst/image.hpp"

namespace kburst {

/// Reads an 8- or 16-bit gray/RGB/RGBA PNG into [0,1] doubles (alpha dropped,
/// gray expanded to 3 channels).
RgbImage read_png(const std::string& path);

/// Writes an RGB image as PNG; values are clamped to [0,1] and quantized to
/// the requested bit depth (8 or 16).
void write_png(const std::string& path, const RgbImage& img, int bit_depth = 8);

}  // namespace kburst
