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

#include "kburst/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace kburst {
namespace {

constexpr double kPsnrCap = 99.0;

void require_same_shape(const RgbImage& a, const RgbImage& b, const char* op) {
  if (a.height != b.height || a.width != b.width || a.channels != b.channels)
    throw std::invalid_argument(std::string(op) + ": image shapes differ");
}

std::vector<double> to_gray(const RgbImage& img) {
  std::vector<double> g(static_cast<size_t>(img.height * img.width));
  for (int64_t y = 0; y < img.height; ++y) {
    for (int64_t x = 0; x < img.width; ++x) {
      double s = 0.0;
      for (int64_t c = 0; c < img.channels; ++c) s += img.at(y, x, c);
      g[static_cast<size_t>(y * img.width + x)] = s / static_cast<double>(img.channels);
    }
  }
  return g;
}

// Catmull-Rom weight, a = -0.5.
double cubic_weight(double d) {
  d = std::abs(d);
  if (d < 1.0) return 1.5 * d * d * d - 2.5 * d * d + 1.0;
  if (d < 2.0) return -0.5 * d * d * d + 2.5 * d * d - 4.0 * d + 2.0;
  return 0.0;
}

}  // namespace

double psnr(const RgbImage& a, const RgbImage& b, double peak) {
  require_same_shape(a, b, "psnr");
  if (a.numel() == 0) throw std::invalid_argument("psnr: empty images");
  double mse = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i) {
    const double d = a.v[i] - b.v[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.v.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

double ssim(const RgbImage& a, const RgbImage& b) {
  require_same_shape(a, b, "ssim");
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  constexpr double kC1 = 0.01 * 0.01;  // (K1 * peak)^2
  constexpr double kC2 = 0.03 * 0.03;
  if (a.height < kWin || a.width < kWin)
    throw std::invalid_argument("ssim: images smaller than the 11x11 window");

  double win[kWin][kWin];
  double wsum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    for (int j = 0; j < kWin; ++j) {
      const double dy = i - (kWin - 1) / 2.0, dx = j - (kWin - 1) / 2.0;
      win[i][j] = std::exp(-(dy * dy + dx * dx) / (2.0 * kSigma * kSigma));
      wsum += win[i][j];
    }
  }
  for (auto& row : win)
    for (double& w : row) w /= wsum;

  const std::vector<double> ga = to_gray(a), gb = to_gray(b);
  const int64_t w = a.width;

  double total = 0.0;
  int64_t count = 0;
  for (int64_t y = 0; y + kWin <= a.height; ++y) {
    for (int64_t x = 0; x + kWin <= a.width; ++x) {
      double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
      for (int i = 0; i < kWin; ++i) {
        for (int j = 0; j < kWin; ++j) {
          const double va = ga[static_cast<size_t>((y + i) * w + (x + j))];
          const double vb = gb[static_cast<size_t>((y + i) * w + (x + j))];
          const double wt = win[i][j];
          mu_a += wt * va;
          mu_b += wt * vb;
          aa += wt * va * va;
          bb += wt * vb * vb;
          ab += wt * va * vb;
        }
      }
      const double var_a = aa - mu_a * mu_a;
      const double var_b = bb - mu_b * mu_b;
      const double cov = ab - mu_a * mu_b;
      const double num = (2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2);
      const double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
      total += num / den;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

RgbImage bicubic_upsample(const RgbImage& img, int scale) {
  if (scale < 1) throw std::invalid_argument("bicubic_upsample: scale must be >= 1");
  if (scale == 1) return img;
  RgbImage out(img.height * scale, img.width * scale, img.channels);
  const auto clampi = [](int64_t v, int64_t hi) { return std::min(std::max(v, int64_t{0}), hi); };
  for (int64_t y = 0; y < out.height; ++y) {
    const double sy = static_cast<double>(y) / scale;
    const int64_t y0 = static_cast<int64_t>(std::floor(sy));
    double wy[4];
    for (int i = 0; i < 4; ++i) wy[i] = cubic_weight(sy - (y0 - 1 + i));
    for (int64_t x = 0; x < out.width; ++x) {
      const double sx = static_cast<double>(x) / scale;
      const int64_t x0 = static_cast<int64_t>(std::floor(sx));
      double wx[4];
      for (int i = 0; i < 4; ++i) wx[i] = cubic_weight(sx - (x0 - 1 + i));
      for (int64_t c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int i = 0; i < 4; ++i) {
          const int64_t yy = clampi(y0 - 1 + i, img.height - 1);
          for (int j = 0; j < 4; ++j) {
            const int64_t xx = clampi(x0 - 1 + j, img.width - 1);
            acc += wy[i] * wx[j] * img.at(yy, xx, c);
          }
        }
        out.at(y, x, c) = acc;
      }
    }
  }
  return out;
}

RgbImage bicubic_baseline(const BurstSample& burst, const IspConfig& isp) {
  if (burst.frames.empty()) throw std::invalid_argument("bicubic_baseline: empty burst");
  const RawImage& ref = burst.frames[0];
  if (burst.hr.height % ref.height != 0)
    throw std::invalid_argument("bicubic_baseline: hr size is not a multiple of frame size");
  const int scale = static_cast<int>(burst.hr.height / ref.height);
  RgbImage rgb = forward_isp(demosaic_naive(ref), isp);
  RgbImage up = bicubic_upsample(rgb, scale);
  up.clamp01();
  return up;
}

double MetricReport::mean_psnr() const {
  if (samples.empty()) return 0.0;
  double s = 0.0;
  for (const auto& m : samples) s += m.psnr;
  return s / static_cast<double>(samples.size());
}

double MetricReport::mean_ssim() const {
  if (samples.empty()) return 0.0;
  double s = 0.0;
  for (const auto& m : samples) s += m.ssim;
  return s / static_cast<double>(samples.size());
}

std::string report_csv(const MetricReport& r) {
  std::ostringstream out;
  out << "sample,psnr,ssim\n";
  char buf[64];
  for (const auto& m : r.samples) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f", m.psnr, m.ssim);
    out << m.id << "," << buf << "\n";
  }
  std::snprintf(buf, sizeof(buf), "%.6f,%.6f", r.mean_psnr(), r.mean_ssim());
  out << "mean," << buf << "\n";
  return out.str();
}

std::string report_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["config_hash"] = r.config_hash;
  j["n_samples"] = r.samples.size();
  j["mean_psnr"] = r.mean_psnr();
  j["mean_ssim"] = r.mean_ssim();
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& m : r.samples)
    arr.push_back({{"id", m.id}, {"psnr", m.psnr}, {"ssim", m.ssim}});
  j["samples"] = arr;
  return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << content;
  if (!f) throw std::runtime_error("failed writing " + path);
}

}  // namespace kburst
