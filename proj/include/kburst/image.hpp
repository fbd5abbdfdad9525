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

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace kburst {

/// Interleaved row-major image, intensities nominally in [0,1].
struct RgbImage {
  int64_t height = 0;
  int64_t width = 0;
  int64_t channels = 0;
  std::vector<double> v;

  RgbImage() = default;
  RgbImage(int64_t h, int64_t w, int64_t c = 3)
      : height(h), width(w), channels(c), v(static_cast<size_t>(h * w * c), 0.0) {}

  double& at(int64_t y, int64_t x, int64_t c) {
    return v[static_cast<size_t>((y * width + x) * channels + c)];
  }
  double at(int64_t y, int64_t x, int64_t c) const {
    return v[static_cast<size_t>((y * width + x) * channels + c)];
  }

  int64_t numel() const { return static_cast<int64_t>(v.size()); }

  void clamp01() {
    for (double& x : v) x = std::min(1.0, std::max(0.0, x));
  }
};

/// One-channel Bayer frame. The layout is fixed RGGB: R at (even,even),
/// G at (even,odd) and (odd,even), B at (odd,odd).
struct RawImage {
  int64_t height = 0;
  int64_t width = 0;
  std::vector<double> v;

  RawImage() = default;
  RawImage(int64_t h, int64_t w)
      : height(h), width(w), v(static_cast<size_t>(h * w), 0.0) {
    if (h % 2 != 0 || w % 2 != 0)
      throw std::invalid_argument("raw image dimensions must be even");
  }

  double& at(int64_t y, int64_t x) { return v[static_cast<size_t>(y * width + x)]; }
  double at(int64_t y, int64_t x) const { return v[static_cast<size_t>(y * width + x)]; }
};

}  // namespace kburst
