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

#include "kburst/config.hpp"

#include <fstream>
#include <stdexcept>

namespace kburst {
namespace {

Json paths_to_json(const ExperimentPaths& p) {
  Json j;
  j["hr_dir"] = p.hr_dir;
  j["data_dir"] = p.data_dir;
  j["pca"] = p.pca;
  j["out_dir"] = p.out_dir;
  return j;
}

ExperimentPaths paths_from_json(const Json& j) {
  check_keys(j, {"hr_dir", "data_dir", "pca", "out_dir"}, "paths");
  ExperimentPaths p;
  p.hr_dir = j.value("hr_dir", p.hr_dir);
  p.data_dir = j.value("data_dir", p.data_dir);
  p.pca = j.value("pca", p.pca);
  p.out_dir = j.value("out_dir", p.out_dir);
  return p;
}

}  // namespace

void ExperimentConfig::validate() const {
  synth.validate();
  model.validate();
  train.validate();
  isp.validate();
  if (pca_corpus_size < 1)
    throw std::invalid_argument("config: pca_corpus_size must be >= 1");
  if (model.scale != synth.scale)
    throw std::invalid_argument("config: model.scale and synth.scale disagree");
}

Json experiment_to_json(const ExperimentConfig& c) {
  Json j;
  j["synth"] = synth_to_json(c.synth);
  j["model"] = model_config_to_json(c.model);
  j["train"] = train_config_to_json(c.train);
  j["isp"] = isp_to_json(c.isp);
  j["paths"] = paths_to_json(c.paths);
  j["pca_corpus_size"] = c.pca_corpus_size;
  j["pca_seed"] = c.pca_seed;
  return j;
}

ExperimentConfig experiment_from_json(const Json& j) {
  check_keys(j, {"synth", "model", "train", "isp", "paths", "pca_corpus_size", "pca_seed"},
             "experiment");
  ExperimentConfig c;
  if (j.contains("isp")) c.isp = isp_from_json(j.at("isp"));
  if (j.contains("synth")) {
    // The synth block inherits the development isp unless it overrides it.
    Json sj = j.at("synth");
    if (!sj.contains("isp") && j.contains("isp")) sj["isp"] = j.at("isp");
    c.synth = synth_from_json(sj);
  } else {
    c.synth.isp = c.isp;
  }
  if (j.contains("model")) c.model = model_config_from_json(j.at("model"));
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
  if (j.contains("paths")) c.paths = paths_from_json(j.at("paths"));
  c.pca_corpus_size = j.value("pca_corpus_size", c.pca_corpus_size);
  c.pca_seed = j.value("pca_seed", c.pca_seed);
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config " + path);
  Json j;
  try {
    j = Json::parse(f);
  } catch (const std::exception& e) {
    throw std::runtime_error("config " + path + ": " + e.what());
  }
  try {
    return experiment_from_json(j);
  } catch (const std::exception& e) {
    throw std::invalid_argument("config " + path + ": " + e.what());
  }
}

void save_experiment_config(const std::string& path, const ExperimentConfig& c) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write config " + path);
  f << experiment_to_json(c).dump(2) << "\n";
}

}  // namespace kburst
