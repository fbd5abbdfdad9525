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

#include "kburst/isp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kburst {
namespace {

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

// s(x) = 3x^2 - 2x^3, the usual smoothstep tone curve.
double smoothstep(double x) {
  x = clamp01(x);
  return x * x * (3.0 - 2.0 * x);
}

// Closed-form inverse via the trigonometric cubic root:
// x = 1/2 - sin(asin(1 - 2y) / 3).
double smoothstep_inverse(double y) {
  y = clamp01(y);
  return 0.5 - std::sin(std::asin(1.0 - 2.0 * y) / 3.0);
}

double srgb_encode(double x) {
  x = clamp01(x);
  return x <= 0.0031308 ? 12.92 * x : 1.055 * std::pow(x, 1.0 / 2.4) - 0.055;
}

double srgb_decode(double y) {
  y = clamp01(y);
  return y <= 0.04045 ? y / 12.92 : std::pow((y + 0.055) / 1.055, 2.4);
}

using Mat3 = std::array<std::array<double, 3>, 3>;

double det3(const Mat3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

Mat3 inverse3(const Mat3& m) {
  const double d = det3(m);
  if (std::abs(d) < 1e-12) throw std::invalid_argument("isp: ccm is singular");
  const double id = 1.0 / d;
  Mat3 r;
  r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * id;
  r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * id;
  r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * id;
  r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * id;
  r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * id;
  r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * id;
  r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * id;
  r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * id;
  r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * id;
  return r;
}

void apply_mat3(RgbImage& img, const Mat3& m) {
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double r = img.at(y, x, 0);
      const double g = img.at(y, x, 1);
      const double b = img.at(y, x, 2);
      img.at(y, x, 0) = m[0][0] * r + m[0][1] * g + m[0][2] * b;
      img.at(y, x, 1) = m[1][0] * r + m[1][1] * g + m[1][2] * b;
      img.at(y, x, 2) = m[2][0] * r + m[2][1] * g + m[2][2] * b;
    }
  }
}

bool is_identity(const Mat3& m) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (m[i][j] != (i == j ? 1.0 : 0.0)) return false;
  return true;
}

}  // namespace

NoiseParams default_noise_params() {
  NoiseParams p;
  const double level = std::exp(-2.6);
  p.read_sigma = level * 0.1;
  p.shot_gain = level * 0.01;
  return p;
}

IspConfig IspConfig::disabled() {
  IspConfig cfg;
  cfg.tone_curve = false;
  cfg.gamma = false;
  cfg.wb_gains = {1.0, 1.0, 1.0};
  return cfg;
}

void IspConfig::validate() const {
  for (double g : wb_gains) {
    if (!(g > 0.0)) throw std::invalid_argument("isp: wb gains must be positive");
  }
  if (std::abs(det3(ccm)) < 1e-12) throw std::invalid_argument("isp: ccm is singular");
}

RgbImage inverse_isp(const RgbImage& srgb, const IspConfig& cfg) {
  cfg.validate();
  RgbImage img = srgb;
  if (cfg.tone_curve) {
    for (double& v : img.v) v = smoothstep_inverse(v);
  }
  if (cfg.gamma) {
    for (double& v : img.v) v = srgb_decode(v);
  }
  if (!is_identity(cfg.ccm)) apply_mat3(img, inverse3(cfg.ccm));
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) img.at(y, x, c) /= cfg.wb_gains[static_cast<size_t>(c)];
    }
  }
  for (double& v : img.v) v = clamp01(v);
  return img;
}

RgbImage forward_isp(const RgbImage& linear, const IspConfig& cfg) {
  cfg.validate();
  RgbImage img = linear;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) img.at(y, x, c) *= cfg.wb_gains[static_cast<size_t>(c)];
    }
  }
  if (!is_identity(cfg.ccm)) apply_mat3(img, cfg.ccm);
  if (cfg.gamma) {
    for (double& v : img.v) v = srgb_encode(v);
  }
  if (cfg.tone_curve) {
    for (double& v : img.v) v = smoothstep(v);
  }
  for (double& v : img.v) v = clamp01(v);
  return img;
}

RawImage mosaic(const RgbImage& linear) {
  if (linear.height % 2 != 0 || linear.width % 2 != 0) {
    throw std::invalid_argument("mosaic: image dimensions must be even");
  }
  RawImage raw(linear.height, linear.width);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      // RGGB: R at (even, even), G at (even, odd) and (odd, even), B at (odd,
      // odd).
      int c;
      if (y % 2 == 0) {
        c = (x % 2 == 0) ? 0 : 1;
      } else {
        c = (x % 2 == 0) ? 1 : 2;
      }
      raw.at(y, x) = linear.at(y, x, c);
    }
  }
  return raw;
}

RawImage add_noise(const RawImage& raw, const NoiseParams& params, Rng& rng) {
  if (params.read_sigma < 0.0 || params.shot_gain < 0.0) {
    throw std::invalid_argument("add_noise: noise parameters must be non-negative");
  }
  RawImage out = raw;
  if (params.exact_poisson && params.shot_gain > 0.0) {
    for (double& v : out.v) {
      const double photons = std::max(v, 0.0) / params.shot_gain;
      double s = params.shot_gain * static_cast<double>(rng.poisson(photons));
      if (params.read_sigma > 0.0) s += params.read_sigma * rng.normal();
      v = clamp01(s);
    }
    return out;
  }
  for (double& v : out.v) {
    const double var = params.read_sigma * params.read_sigma +
                       params.shot_gain * std::max(v, 0.0);
    v = clamp01(v + rng.normal() * std::sqrt(var));
  }
  return out;
}

RgbImage demosaic_naive(const RawImage& raw) {
  const int h = raw.height;
  const int w = raw.width;
  RgbImage out(h, w);
  auto sample = [&](int y, int x) {
    y = std::min(h - 1, std::max(0, y));
    x = std::min(w - 1, std::max(0, x));
    return raw.at(y, x);
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool ey = y % 2 == 0;
      const bool ex = x % 2 == 0;
      double r, g, b;
      if (ey && ex) {  // red site
        r = raw.at(y, x);
        g = (sample(y - 1, x) + sample(y + 1, x) + sample(y, x - 1) + sample(y, x + 1)) / 4.0;
        b = (sample(y - 1, x - 1) + sample(y - 1, x + 1) + sample(y + 1, x - 1) +
             sample(y + 1, x + 1)) /
            4.0;
      } else if (ey && !ex) {  // green site, red row
        r = (sample(y, x - 1) + sample(y, x + 1)) / 2.0;
        g = raw.at(y, x);
        b = (sample(y - 1, x) + sample(y + 1, x)) / 2.0;
      } else if (!ey && ex) {  // green site, blue row
        r = (sample(y - 1, x) + sample(y + 1, x)) / 2.0;
        g = raw.at(y, x);
        b = (sample(y, x - 1) + sample(y, x + 1)) / 2.0;
      } else {  // blue site
        r = (sample(y - 1, x - 1) + sample(y - 1, x + 1) + sample(y + 1, x - 1) +
             sample(y + 1, x + 1)) /
            4.0;
        g = (sample(y - 1, x) + sample(y + 1, x) + sample(y, x - 1) + sample(y, x + 1)) / 4.0;
        b = raw.at(y, x);
      }
      out.at(y, x, 0) = r;
      out.at(y, x, 1) = g;
      out.at(y, x, 2) = b;
    }
  }
  return out;
}

}  // namespace kburst
