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

#include "kburst/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kburst {
namespace {

int clampi(int v, int lo, int hi) { return std::min(hi, std::max(lo, v)); }

// Edge-replicating bilinear lookup.
double sample_replicate(const RgbImage& img, double y, double x, int c) {
  const int y0 = static_cast<int>(std::floor(y));
  const int x0 = static_cast<int>(std::floor(x));
  const double fy = y - y0;
  const double fx = x - x0;
  const int y0c = clampi(y0, 0, img.height - 1);
  const int y1c = clampi(y0 + 1, 0, img.height - 1);
  const int x0c = clampi(x0, 0, img.width - 1);
  const int x1c = clampi(x0 + 1, 0, img.width - 1);
  const double v00 = img.at(y0c, x0c, c);
  const double v01 = img.at(y0c, x1c, c);
  const double v10 = img.at(y1c, x0c, c);
  const double v11 = img.at(y1c, x1c, c);
  return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v01) + fy * ((1.0 - fx) * v10 + fx * v11);
}

// One blurred pixel: true convolution, out(p) = sum_q k(q) img(p - q), with
// edge replication. Shared by blur and blur_decimate so the fused path is
// bit-identical.
double blur_pixel(const RgbImage& img, const BlurKernel& k, int y, int x, int c) {
  const int n = k.size;
  const int half = n / 2;
  double acc = 0.0;
  for (int u = 0; u < n; ++u) {
    const int sy = clampi(y - (u - half), 0, img.height - 1);
    for (int v = 0; v < n; ++v) {
      const int sx = clampi(x - (v - half), 0, img.width - 1);
      acc += k.at(u, v) * img.at(sy, sx, c);
    }
  }
  return acc;
}

}  // namespace

AffineTransform AffineTransform::inverse() const {
  // In center-relative coordinates the forward map is p' = R(phi) p + d, so
  // the inverse rotates by -phi and translates by -R(-phi) d.
  AffineTransform inv;
  inv.phi = -phi;
  const double c = std::cos(-phi);
  const double s = std::sin(-phi);
  inv.dx = -(c * dx - s * dy);
  inv.dy = -(s * dx + c * dy);
  return inv;
}

void SynthConfig::validate() const {
  if (n_frames < 1) throw std::invalid_argument("synth: n_frames must be >= 1");
  if (scale < 1) throw std::invalid_argument("synth: scale must be >= 1");
  if (!(width_range.first > 0.0) || width_range.first > width_range.second) {
    throw std::invalid_argument("synth: invalid kernel width range");
  }
  if (translation_max < 0.0 || rotation_max < 0.0) {
    throw std::invalid_argument("synth: motion ranges must be non-negative");
  }
  if (noise.read_sigma < 0.0 || noise.shot_gain < 0.0) {
    throw std::invalid_argument("synth: noise parameters must be non-negative");
  }
  isp.validate();
}

RgbImage apply_affine(const RgbImage& img, const AffineTransform& t) {
  if (t.is_identity()) return img;
  RgbImage out(img.height, img.width);
  const double cy = 0.5 * (img.height - 1);
  const double cx = 0.5 * (img.width - 1);
  // Inverse mapping: for each destination pixel, sample the source at
  // R(-phi) (p - c - d) + c.
  const double c = std::cos(-t.phi);
  const double s = std::sin(-t.phi);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double ry = y - cy - t.dy;
      const double rx = x - cx - t.dx;
      const double sy = s * rx + c * ry + cy;
      const double sx = c * rx - s * ry + cx;
      for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = sample_replicate(img, sy, sx, ch);
    }
  }
  return out;
}

RgbImage blur(const RgbImage& img, const BlurKernel& k) {
  RgbImage out(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = blur_pixel(img, k, y, x, c);
    }
  }
  return out;
}

RgbImage decimate(const RgbImage& img, int s) {
  if (s < 1) throw std::invalid_argument("decimate: scale must be >= 1");
  if (img.height % s != 0 || img.width % s != 0) {
    throw std::invalid_argument("decimate: dimensions not divisible by scale");
  }
  if (s == 1) return img;
  RgbImage out(img.height / s, img.width / s);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y * s, x * s, c);
    }
  }
  return out;
}

RgbImage blur_decimate(const RgbImage& img, const BlurKernel& k, int s) {
  if (s < 1) throw std::invalid_argument("blur_decimate: scale must be >= 1");
  if (img.height % s != 0 || img.width % s != 0) {
    throw std::invalid_argument("blur_decimate: dimensions not divisible by scale");
  }
  RgbImage out(img.height / s, img.width / s);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = blur_pixel(img, k, y * s, x * s, c);
    }
  }
  return out;
}

namespace {

void check_burst_dims(const RgbImage& hr, const SynthConfig& cfg) {
  if (hr.height % (2 * cfg.scale) != 0 || hr.width % (2 * cfg.scale) != 0) {
    throw std::invalid_argument("synthesize_burst: HR dims must be divisible by 2*scale");
  }
}

RawImage degrade_frame(const RgbImage& linear, const AffineTransform& t,
                       const BlurKernel& k, const SynthConfig& cfg, Rng& rng) {
  const RgbImage warped = apply_affine(linear, t);
  const RgbImage lr = blur_decimate(warped, k, cfg.scale);
  return add_noise(mosaic(lr), cfg.noise, rng);
}

}  // namespace

BurstSample synthesize_burst(const RgbImage& hr, const SynthConfig& cfg,
                             uint64_t sample_index) {
  cfg.validate();
  check_burst_dims(hr, cfg);
  const RgbImage linear = inverse_isp(hr, cfg.isp);

  BurstSample sample;
  sample.hr = hr;
  sample.noise = cfg.noise;
  sample.seed = cfg.seed;
  for (int i = 0; i < cfg.n_frames; ++i) {
    Rng rng(derive_seed(cfg.seed, {sample_index, static_cast<uint64_t>(i)}));
    AffineTransform t;
    if (i > 0) {
      t.dx = rng.uniform(-cfg.translation_max, cfg.translation_max);
      t.dy = rng.uniform(-cfg.translation_max, cfg.translation_max);
      t.phi = rng.uniform(-cfg.rotation_max, cfg.rotation_max);
    }
    const KernelParams kp =
        sample_kernel_params(cfg.width_range.first, cfg.width_range.second, rng);
    const BlurKernel k = make_anisotropic_gaussian(kp);

    sample.frames.push_back(degrade_frame(linear, t, k, cfg, rng));
    sample.kernels.push_back(k);
    sample.kernel_params.push_back(kp);
    sample.transforms.push_back(t);
  }
  return sample;
}

BurstSample synthesize_burst_given(const RgbImage& hr, const SynthConfig& cfg,
                                   const std::vector<BlurKernel>& kernels,
                                   const std::vector<AffineTransform>& transforms,
                                   uint64_t sample_index) {
  cfg.validate();
  check_burst_dims(hr, cfg);
  if (kernels.size() != static_cast<size_t>(cfg.n_frames) ||
      transforms.size() != static_cast<size_t>(cfg.n_frames)) {
    throw std::invalid_argument("synthesize_burst_given: latent counts must match n_frames");
  }
  const RgbImage linear = inverse_isp(hr, cfg.isp);

  BurstSample sample;
  sample.hr = hr;
  sample.noise = cfg.noise;
  sample.seed = cfg.seed;
  for (int i = 0; i < cfg.n_frames; ++i) {
    Rng rng(derive_seed(cfg.seed, {sample_index, static_cast<uint64_t>(i)}));
    sample.frames.push_back(
        degrade_frame(linear, transforms[static_cast<size_t>(i)],
                      kernels[static_cast<size_t>(i)], cfg, rng));
    sample.kernels.push_back(kernels[static_cast<size_t>(i)]);
    sample.kernel_params.push_back(KernelParams{});
    sample.transforms.push_back(transforms[static_cast<size_t>(i)]);
  }
  return sample;
}

}  // namespace kburst
