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

#include <array>

#include "kburst/image.hpp"
#include "kburst/rng.hpp"

namespace kburst {

/// Heteroscedastic sensor noise: variance read_sigma^2 + shot_gain * signal.
struct NoiseParams {
  double read_sigma = 0.0;
  double shot_gain = 0.0;
  /// Sample the shot component as a true Poisson instead of its Gaussian
  /// approximation (A/B diagnostics).
  bool exact_poisson = false;
};

/// Defaults follow the log-domain noise level 0.26 interpretation:
/// read ~ exp(-2.6)*0.1, shot ~ exp(-2.6)*0.01.
NoiseParams default_noise_params();

/// Simplified invertible camera pipeline. Forward order (sensor -> sRGB):
/// white balance gains, color-correction matrix, sRGB gamma, smoothstep tone
/// curve. inverse_isp applies the exact stage-by-stage inverse.
struct IspConfig {
  bool tone_curve = true;
  bool gamma = true;
  std::array<double, 3> wb_gains = {2.0, 1.0, 1.7};
  std::array<std::array<double, 3>, 3> ccm = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

  static IspConfig disabled();
  /// Throws std::invalid_argument when the CCM is singular or a gain is zero.
  void validate() const;
};

RgbImage inverse_isp(const RgbImage& srgb, const IspConfig& cfg);
RgbImage forward_isp(const RgbImage& linear, const IspConfig& cfg);

/// RGGB Bayer sampling; dimensions must be even.
RawImage mosaic(const RgbImage& linear);

/// Adds clamped heteroscedastic noise; a given rng state yields a unique
/// output stream.
RawImage add_noise(const RawImage& raw, const NoiseParams& params, Rng& rng);

/// Bilinear per-channel fill of the Bayer lattice, for visualization and the
/// bicubic baseline path.
RgbImage demosaic_naive(const RawImage& raw);

}  // namespace kburst
