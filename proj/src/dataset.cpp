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

#include "kburst/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "kburst/json_codecs.hpp"
#include "kburst/png_io.hpp"
#include "kburst/tensor.hpp"
#include "kburst/tns.hpp"

namespace fs = std::filesystem;

namespace kburst {
namespace {

constexpr const char* kFormat = "kburst-dataset-v1";

std::string sample_id(int64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sample_%06lld", static_cast<long long>(index));
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

Json read_json_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  Json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("bad JSON in " + path + ": " + e.what());
  }
  return j;
}

}  // namespace

RgbImage synthetic_hr_image(int h, int w, uint64_t seed) {
  Rng rng(derive_seed(seed, {0x4852u}));
  RgbImage img(h, w);

  // Smooth per-channel gradient base.
  double gx[3], gy[3], g0[3];
  for (int c = 0; c < 3; ++c) {
    g0[c] = rng.uniform(0.2, 0.8);
    gx[c] = rng.uniform(-0.4, 0.4);
    gy[c] = rng.uniform(-0.4, 0.4);
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double fy = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
      const double fx = w > 1 ? static_cast<double>(x) / (w - 1) : 0.0;
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = g0[c] + gx[c] * fx + gy[c] * fy;
    }
  }

  // Oriented sinusoids add mid/high-frequency texture.
  const int n_waves = 4;
  for (int k = 0; k < n_waves; ++k) {
    const double freq = rng.uniform(0.02, 0.22);   // cycles per pixel
    const double angle = rng.uniform(0.0, M_PI);
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    const double fy = freq * std::sin(angle);
    const double fx = freq * std::cos(angle);
    double amp[3];
    for (int c = 0; c < 3; ++c) amp[c] = rng.uniform(0.02, 0.12);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double s = std::sin(2.0 * M_PI * (fx * x + fy * y) + phase);
        for (int c = 0; c < 3; ++c) img.at(y, x, c) += amp[c] * s;
      }
    }
  }

  // Hard-edged shapes: rectangles and disks.
  const int n_shapes = 6;
  for (int k = 0; k < n_shapes; ++k) {
    double color[3];
    for (int c = 0; c < 3; ++c) color[c] = rng.uniform(0.0, 1.0);
    const double alpha = rng.uniform(0.4, 0.9);
    if (rng.uniform() < 0.5) {
      int y0 = static_cast<int>(rng.uniform(0, h - 1));
      int x0 = static_cast<int>(rng.uniform(0, w - 1));
      int y1 = std::min<int>(h, y0 + 2 + static_cast<int>(rng.uniform(0, h / 3.0)));
      int x1 = std::min<int>(w, x0 + 2 + static_cast<int>(rng.uniform(0, w / 3.0)));
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x)
          for (int c = 0; c < 3; ++c)
            img.at(y, x, c) = (1.0 - alpha) * img.at(y, x, c) + alpha * color[c];
    } else {
      const double cy = rng.uniform(0, h - 1);
      const double cx = rng.uniform(0, w - 1);
      const double r = rng.uniform(2.0, std::max(3.0, std::min(h, w) / 5.0));
      const int ylo = std::max(0, static_cast<int>(cy - r) - 1);
      const int yhi = std::min(h, static_cast<int>(cy + r) + 2);
      const int xlo = std::max(0, static_cast<int>(cx - r) - 1);
      const int xhi = std::min(w, static_cast<int>(cx + r) + 2);
      for (int y = ylo; y < yhi; ++y) {
        for (int x = xlo; x < xhi; ++x) {
          const double d = std::hypot(y - cy, x - cx);
          if (d <= r)
            for (int c = 0; c < 3; ++c)
              img.at(y, x, c) = (1.0 - alpha) * img.at(y, x, c) + alpha * color[c];
        }
      }
    }
  }

  // Affinely squeeze into [0.02, 0.98] so ISP round trips stay off the clamp
  // rails.
  double lo = img.v[0], hi = img.v[0];
  for (double v : img.v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  for (double& v : img.v) v = 0.02 + 0.96 * (v - lo) / span;
  return img;
}

void write_burst_sample(const std::string& sample_dir, const BurstSample& s) {
  fs::create_directories(sample_dir);
  write_png(sample_dir + "/hr.png", s.hr, 16);

  const int64_t n = static_cast<int64_t>(s.frames.size());
  const int64_t fh = s.frames.empty() ? 0 : s.frames[0].height;
  const int64_t fw = s.frames.empty() ? 0 : s.frames[0].width;
  Tensor frames({n, fh, fw});
  for (int64_t i = 0; i < n; ++i) {
    const RawImage& f = s.frames[static_cast<size_t>(i)];
    if (f.height != fh || f.width != fw)
      throw std::invalid_argument("write_burst_sample: ragged frame shapes");
    for (int64_t p = 0; p < fh * fw; ++p)
      frames[i * fh * fw + p] = static_cast<float>(f.v[static_cast<size_t>(p)]);
  }
  TensorContainer fc;
  fc.put("frames", std::move(frames));
  fc.save(sample_dir + "/frames.tns");

  const int64_t ks = s.kernels.empty() ? 0 : s.kernels[0].size;
  Tensor kernels({n, ks, ks});
  for (int64_t i = 0; i < n; ++i) {
    const BlurKernel& k = s.kernels[static_cast<size_t>(i)];
    if (k.size != ks) throw std::invalid_argument("write_burst_sample: ragged kernel sizes");
    for (int64_t p = 0; p < ks * ks; ++p)
      kernels[i * ks * ks + p] = static_cast<float>(k.v[static_cast<size_t>(p)]);
  }
  TensorContainer kc;
  kc.put("kernels", std::move(kernels));
  kc.save(sample_dir + "/kernels.tns");

  Json t;
  t["seed"] = s.seed;
  t["noise"] = noise_to_json(s.noise);
  t["frames"] = Json::array();
  for (size_t i = 0; i < s.transforms.size(); ++i) {
    Json fr;
    fr["transform"] = transform_to_json(s.transforms[i]);
    fr["kernel_params"] =
        i < s.kernel_params.size() ? kernel_params_to_json(s.kernel_params[i]) : Json();
    t["frames"].push_back(fr);
  }
  write_text(sample_dir + "/transforms.json", t.dump(2) + "\n");
}

BurstSample read_burst_sample(const std::string& sample_dir) {
  BurstSample s;
  s.hr = read_png(sample_dir + "/hr.png");

  const TensorContainer fc = TensorContainer::load(sample_dir + "/frames.tns");
  const Tensor& frames = fc.get("frames");
  if (frames.rank() != 3) throw std::runtime_error("frames.tns: expected rank-3 tensor");
  const int64_t n = frames.dim(0), fh = frames.dim(1), fw = frames.dim(2);
  for (int64_t i = 0; i < n; ++i) {
    RawImage f(fh, fw);
    for (int64_t p = 0; p < fh * fw; ++p)
      f.v[static_cast<size_t>(p)] = static_cast<double>(frames[i * fh * fw + p]);
    s.frames.push_back(std::move(f));
  }

  const TensorContainer kc = TensorContainer::load(sample_dir + "/kernels.tns");
  const Tensor& kernels = kc.get("kernels");
  if (kernels.rank() != 3 || kernels.dim(0) != n)
    throw std::runtime_error("kernels.tns: shape does not match frames");
  const int64_t ks = kernels.dim(1);
  for (int64_t i = 0; i < n; ++i) {
    BlurKernel k(static_cast<int>(ks));
    for (int64_t p = 0; p < ks * ks; ++p)
      k.v[static_cast<size_t>(p)] = static_cast<double>(kernels[i * ks * ks + p]);
    s.kernels.push_back(std::move(k));
  }

  const Json t = read_json_file(sample_dir + "/transforms.json");
  s.seed = t.value("seed", uint64_t{0});
  if (t.contains("noise")) s.noise = noise_from_json(t.at("noise"));
  if (t.contains("frames")) {
    for (const auto& fr : t.at("frames")) {
      s.transforms.push_back(transform_from_json(fr.at("transform")));
      if (fr.contains("kernel_params") && fr.at("kernel_params").is_object())
        s.kernel_params.push_back(kernel_params_from_json(fr.at("kernel_params")));
    }
  }
  if (s.transforms.size() != static_cast<size_t>(n))
    throw std::runtime_error("transforms.json: frame count mismatch in " + sample_dir);
  return s;
}

void synth_dataset(const std::vector<std::string>& hr_paths, const std::string& out_dir,
                   const SynthConfig& cfg,
                   const std::optional<std::pair<double, double>>& band) {
  if (hr_paths.empty()) throw std::invalid_argument("synth_dataset: no HR images");
  SynthConfig eff = cfg;
  if (band) {
    // Bands quoted from zero mean "near-delta"; the Gaussian needs a strictly
    // positive width.
    eff.width_range = {std::max(band->first, 0.01), band->second};
  }
  eff.validate();
  fs::create_directories(out_dir);

  Manifest m;
  m.format = kFormat;
  m.config = eff;
  m.band = band;
  for (size_t i = 0; i < hr_paths.size(); ++i) {
    RgbImage hr;
    try {
      hr = read_png(hr_paths[i]);
    } catch (const std::exception& e) {
      throw std::runtime_error("synth_dataset: reading " + hr_paths[i] + ": " + e.what());
    }
    const BurstSample s = synthesize_burst(hr, eff, static_cast<uint64_t>(i));
    const std::string id = sample_id(static_cast<int64_t>(i));
    write_burst_sample(out_dir + "/" + id, s);
    ManifestEntry e;
    e.id = id;
    e.seed = derive_seed(eff.seed, {static_cast<uint64_t>(i)});
    e.hr_source = fs::path(hr_paths[i]).filename().string();
    m.samples.push_back(std::move(e));
  }
  write_manifest(out_dir, m);  // last: marks the directory complete
}

void make_eval_set(const std::string& hr_dir, const std::string& out_dir,
                   double width_lo, double width_hi, uint64_t seed, SynthConfig base) {
  base.seed = seed;
  const std::vector<std::string> paths = list_files_sorted(hr_dir);
  std::vector<std::string> pngs;
  for (const std::string& p : paths)
    if (p.size() >= 4 && p.substr(p.size() - 4) == ".png") pngs.push_back(p);
  if (pngs.empty()) throw std::invalid_argument("make_eval_set: no .png files in " + hr_dir);
  synth_dataset(pngs, out_dir, base, std::make_pair(width_lo, width_hi));
}

Manifest read_manifest(const std::string& dataset_dir) {
  const std::string path = dataset_dir + "/manifest.json";
  if (!fs::exists(path)) {
    throw std::runtime_error("no manifest in " + dataset_dir +
                             " (generation incomplete or not a dataset)");
  }
  const Json j = read_json_file(path);
  check_keys(j, {"format", "config", "band", "samples"}, "manifest");
  Manifest m;
  m.format = j.value("format", "");
  if (m.format != kFormat)
    throw std::runtime_error("unsupported dataset format \"" + m.format + "\" in " + path);
  m.config = synth_from_json(j.at("config"));
  if (j.contains("band") && !j.at("band").is_null()) {
    const auto b = j.at("band").get<std::array<double, 2>>();
    m.band = std::make_pair(b[0], b[1]);
  }
  for (const auto& e : j.at("samples")) {
    check_keys(e, {"id", "seed", "hr_source"}, "manifest sample");
    ManifestEntry me;
    me.id = e.at("id").get<std::string>();
    me.seed = e.value("seed", uint64_t{0});
    me.hr_source = e.value("hr_source", "");
    m.samples.push_back(std::move(me));
  }
  return m;
}

void write_manifest(const std::string& dataset_dir, const Manifest& m) {
  Json j;
  j["format"] = m.format.empty() ? kFormat : m.format;
  j["config"] = synth_to_json(m.config);
  j["band"] = m.band ? Json{m.band->first, m.band->second} : Json(nullptr);
  j["samples"] = Json::array();
  for (const ManifestEntry& e : m.samples) {
    j["samples"].push_back(Json{{"id", e.id}, {"seed", e.seed}, {"hr_source", e.hr_source}});
  }
  write_text(dataset_dir + "/manifest.json", j.dump(2) + "\n");
}

std::vector<std::string> list_files_sorted(const std::string& dir) {
  if (!fs::is_directory(dir)) throw std::invalid_argument("not a directory: " + dir);
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) out.push_back(entry.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace kburst
