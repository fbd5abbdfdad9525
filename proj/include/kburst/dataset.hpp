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

#include <optional>
#include <string>
#include <vector>

#include "kburst/synth.hpp"

namespace kburst {

/// Procedural HR test content: smooth gradients plus oriented sinusoids and a
/// few hard-edged shapes, so bursts carry both low- and high-frequency detail.
RgbImage synthetic_hr_image(int h, int w, uint64_t seed);

struct ManifestEntry {
  std::string id;       // e.g. "sample_000003"
  uint64_t seed = 0;    // per-sample stream seed component (sample index)
  std::string hr_source;
};

struct Manifest {
  std::string format;   // "kburst-dataset-v1"
  SynthConfig config;
  std::optional<std::pair<double, double>> band;  // eval-set kernel width band
  std::vector<ManifestEntry> samples;
};

/// Writes one sample directory: hr.png (16-bit), frames.tns, kernels.tns,
/// transforms.json.
void write_burst_sample(const std::string& sample_dir, const BurstSample& s);

/// Reads a sample back. Frames and kernels come back at f32 storage
/// precision.
BurstSample read_burst_sample(const std::string& sample_dir);

/// Generates a dataset: one burst per HR image, sample i seeded by
/// (config.seed, i). The manifest is written last, as the completion marker.
/// `band`, when set, overrides config.width_range (clamped away from zero).
void synth_dataset(const std::vector<std::string>& hr_paths, const std::string& out_dir,
                   const SynthConfig& cfg,
                   const std::optional<std::pair<double, double>>& band = std::nullopt);

/// make_eval_set: synthesizes a band-restricted evaluation set from an HR
/// image directory (files taken in sorted order).
void make_eval_set(const std::string& hr_dir, const std::string& out_dir,
                   double width_lo, double width_hi, uint64_t seed,
                   SynthConfig base = SynthConfig{});

/// Refuses directories without a manifest (incomplete generation).
Manifest read_manifest(const std::string& dataset_dir);
void write_manifest(const std::string& dataset_dir, const Manifest& m);

/// Lists regular files in a directory, sorted by name.
std::vector<std::string> list_files_sorted(const std::string& dir);

}  // namespace kburst
