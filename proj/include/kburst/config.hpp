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

#include "kburst/isp.hpp"
#include "kburst/json_codecs.hpp"
#include "kburst/model.hpp"
#include "kburst/synth.hpp"
#include "kburst/train.hpp"

namespace kburst {

/// Paths referenced by CLI commands; any of them may instead come from
/// command-line flags (flags win).
struct ExperimentPaths {
  std::string hr_dir;
  std::string data_dir;
  std::string pca;
  std::string out_dir;
};

/// Top-level config file: {"synth": {...}, "model": {...}, "train": {...},
/// "isp": {...}, "paths": {...}, "pca_corpus_size": n, "pca_seed": s}.
/// Every block is optional and defaults apply; unknown keys anywhere are
/// rejected. The top-level isp block is the development pipeline used for
/// rendering/baselines; when the synth block does not carry its own isp
/// settings it inherits this one.
struct ExperimentConfig {
  SynthConfig synth;
  ModelConfig model;
  TrainConfig train;
  IspConfig isp;
  ExperimentPaths paths;
  int pca_corpus_size = 10000;  // kernels sampled when fitting the basis
  uint64_t pca_seed = 7;

  void validate() const;
};

Json experiment_to_json(const ExperimentConfig& c);
ExperimentConfig experiment_from_json(const Json& j);

ExperimentConfig load_experiment_config(const std::string& path);
void save_experiment_config(const std::string& path, const ExperimentConfig& c);

}  // namespace kburst
