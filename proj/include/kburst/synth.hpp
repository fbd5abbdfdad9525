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

#include <cstdint>
#include <utility>
#include <vector>

#include "kburst/image.hpp"
#include "kburst/isp.hpp"
#include "kburst/kernels.hpp"
#include "kburst/rng.hpp"

namespace kburst {

/// Rigid scene motion about the image center, applied before blur. Frame 0 of
/// every burst carries the identity so ground truth stays aligned with the
/// reference frame.
struct AffineTransform {
  double dx = 0.0;
  double dy = 0.0;
  double phi = 0.0;

  bool is_identity() const { return dx == 0.0 && dy == 0.0 && phi == 0.0; }
  AffineTransform inverse() const;
};

struct SynthConfig {
  int n_frames = 8;
  int scale = 4;
  std::pair<double, double> width_range = {0.6, 5.0};
  double translation_max = 8.0;   // HR pixels, per axis
  double rotation_max = 0.0175;   // radians (~1 degree)
  NoiseParams noise = default_noise_params();
  IspConfig isp;
  uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

/// One supervised record: HR ground truth plus the N degraded raw frames and
/// the latent variables that produced them.
struct BurstSample {
  RgbImage hr;
  std::vector<RawImage> frames;
  std::vector<BlurKernel> kernels;
  std::vector<KernelParams> kernel_params;
  std::vector<AffineTransform> transforms;
  NoiseParams noise;
  uint64_t seed = 0;
};

/// Bilinear warp; out-of-bounds coordinates use edge replication.
RgbImage apply_affine(const RgbImage& img, const AffineTransform& t);

/// Per-channel 2-D convolution with edge-replicate padding.
RgbImage blur(const RgbImage& img, const BlurKernel& k);

/// Keep every s-th pixel starting at index 0 on both axes.
RgbImage decimate(const RgbImage& img, int s);

/// blur followed by decimate, evaluating only the kept output sites. Matches
/// decimate(blur(img, k), s) bit for bit.
RgbImage blur_decimate(const RgbImage& img, const BlurKernel& k, int s);

/// Runs the full degradation chain per frame:
///   inverse_isp -> apply_affine -> blur -> decimate -> mosaic -> add_noise.
/// Deterministic: frame i uses the stream derive_seed(cfg.seed,
/// {sample_index, i}).
BurstSample synthesize_burst(const RgbImage& hr, const SynthConfig& cfg,
                             uint64_t sample_index = 0);

/// Same chain with caller-supplied latents instead of sampled ones
/// (degenerate-pipeline checks, controlled ablations).
BurstSample synthesize_burst_given(const RgbImage& hr, const SynthConfig& cfg,
                                   const std::vector<BlurKernel>& kernels,
                                   const std::vector<AffineTransform>& transforms,
                                   uint64_t sample_index = 0);

}  // namespace kburst
