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
#include <vector>

#include "kburst/image.hpp"
#include "kburst/isp.hpp"
#include "kburst/synth.hpp"

namespace kburst {

/// 10*log10(peak^2 / MSE) over all channels; identical images (MSE = 0)
/// report the cap of 99 dB, and no value exceeds the cap.
double psnr(const RgbImage& a, const RgbImage& b, double peak = 1.0);

/// Single-scale SSIM on the channel-mean grayscale image: 11x11 Gaussian
/// window (sigma 1.5), K1=0.01, K2=0.03, peak 1.0, averaged over valid
/// (fully interior) windows. Images smaller than the window are rejected.
double ssim(const RgbImage& a, const RgbImage& b);

/// Separable Catmull-Rom (a = -0.5) upsampling by an integer factor with
/// replicated edges. Source grid alignment matches decimation: output pixel
/// (sy, sx) samples source (y, x) exactly.
RgbImage bicubic_upsample(const RgbImage& img, int scale);

/// Comparison floor: demosaic frame 0, develop to sRGB, bicubic-upsample by
/// the hr/frame size ratio. Output shape equals the sample's ground truth.
RgbImage bicubic_baseline(const BurstSample& burst, const IspConfig& isp);

struct SampleMetrics {
  std::string id;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct MetricReport {
  std::vector<SampleMetrics> samples;
  std::string config_hash;

  double mean_psnr() const;
  double mean_ssim() const;
};

/// CSV with one row per sample plus a final "mean" row.
std::string report_csv(const MetricReport& r);
/// JSON summary (per-sample values + aggregates + config hash).
std::string report_json(const MetricReport& r);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace kburst
