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

#include "kburst/json_codecs.hpp"

#include <stdexcept>
#include <string>

namespace kburst {

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const char* ctx) {
  if (!j.is_object()) {
    throw std::invalid_argument(std::string(ctx) + ": expected a JSON object");
  }
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed) {
      if (item.key() == a) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw std::invalid_argument(std::string(ctx) + ": unknown key \"" + item.key() + "\"");
    }
  }
}

Json noise_to_json(const NoiseParams& p) {
  return Json{{"read_sigma", p.read_sigma},
              {"shot_gain", p.shot_gain},
              {"exact_poisson", p.exact_poisson}};
}

NoiseParams noise_from_json(const Json& j) {
  check_keys(j, {"read_sigma", "shot_gain", "exact_poisson"}, "noise");
  NoiseParams p;
  p.read_sigma = j.value("read_sigma", p.read_sigma);
  p.shot_gain = j.value("shot_gain", p.shot_gain);
  p.exact_poisson = j.value("exact_poisson", p.exact_poisson);
  return p;
}

Json isp_to_json(const IspConfig& c) {
  Json j;
  j["tone_curve"] = c.tone_curve;
  j["gamma"] = c.gamma;
  j["wb_gains"] = c.wb_gains;
  j["ccm"] = c.ccm;
  return j;
}

IspConfig isp_from_json(const Json& j) {
  check_keys(j, {"tone_curve", "gamma", "wb_gains", "ccm"}, "isp");
  IspConfig c;
  c.tone_curve = j.value("tone_curve", c.tone_curve);
  c.gamma = j.value("gamma", c.gamma);
  if (j.contains("wb_gains")) c.wb_gains = j.at("wb_gains").get<std::array<double, 3>>();
  if (j.contains("ccm")) c.ccm = j.at("ccm").get<std::array<std::array<double, 3>, 3>>();
  c.validate();
  return c;
}

Json synth_to_json(const SynthConfig& c) {
  Json j;
  j["n_frames"] = c.n_frames;
  j["scale"] = c.scale;
  j["width_range"] = {c.width_range.first, c.width_range.second};
  j["translation_max"] = c.translation_max;
  j["rotation_max"] = c.rotation_max;
  j["noise"] = noise_to_json(c.noise);
  j["isp"] = isp_to_json(c.isp);
  j["seed"] = c.seed;
  return j;
}

SynthConfig synth_from_json(const Json& j) {
  check_keys(j,
             {"n_frames", "scale", "width_range", "translation_max", "rotation_max",
              "noise", "isp", "seed"},
             "synth");
  SynthConfig c;
  c.n_frames = j.value("n_frames", c.n_frames);
  c.scale = j.value("scale", c.scale);
  if (j.contains("width_range")) {
    const auto wr = j.at("width_range").get<std::array<double, 2>>();
    c.width_range = {wr[0], wr[1]};
  }
  c.translation_max = j.value("translation_max", c.translation_max);
  c.rotation_max = j.value("rotation_max", c.rotation_max);
  if (j.contains("noise")) c.noise = noise_from_json(j.at("noise"));
  if (j.contains("isp")) c.isp = isp_from_json(j.at("isp"));
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

Json transform_to_json(const AffineTransform& t) {
  return Json{{"dx", t.dx}, {"dy", t.dy}, {"phi", t.phi}};
}

AffineTransform transform_from_json(const Json& j) {
  check_keys(j, {"dx", "dy", "phi"}, "transform");
  AffineTransform t;
  t.dx = j.value("dx", 0.0);
  t.dy = j.value("dy", 0.0);
  t.phi = j.value("phi", 0.0);
  return t;
}

Json kernel_params_to_json(const KernelParams& p) {
  return Json{{"sigma1", p.sigma1}, {"sigma2", p.sigma2}, {"theta", p.theta}};
}

KernelParams kernel_params_from_json(const Json& j) {
  check_keys(j, {"sigma1", "sigma2", "theta"}, "kernel_params");
  KernelParams p;
  p.sigma1 = j.value("sigma1", p.sigma1);
  p.sigma2 = j.value("sigma2", p.sigma2);
  p.theta = j.value("theta", p.theta);
  return p;
}

Json model_config_to_json(const ModelConfig& c) {
  Json j;
  j["base_channels"] = c.base_channels;
  j["n_akab"] = c.n_akab;
  j["n_rcab"] = c.n_rcab;
  j["pyramid_levels"] = c.pyramid_levels;
  j["embed_t"] = c.embed_t;
  j["scale"] = c.scale;
  j["kernel_size"] = c.kernel_size;
  j["use_akab"] = c.use_akab;
  j["use_kad"] = c.use_kad;
  j["use_pyramid"] = c.use_pyramid;
  j["use_rcab"] = c.use_rcab;
  j["init_seed"] = c.init_seed;
  return j;
}

ModelConfig model_config_from_json(const Json& j) {
  check_keys(j,
             {"base_channels", "n_akab", "n_rcab", "pyramid_levels", "embed_t", "scale",
              "kernel_size", "use_akab", "use_kad", "use_pyramid", "use_rcab", "init_seed"},
             "model");
  ModelConfig c;
  c.base_channels = j.value("base_channels", c.base_channels);
  c.n_akab = j.value("n_akab", c.n_akab);
  c.n_rcab = j.value("n_rcab", c.n_rcab);
  c.pyramid_levels = j.value("pyramid_levels", c.pyramid_levels);
  c.embed_t = j.value("embed_t", c.embed_t);
  c.scale = j.value("scale", c.scale);
  c.kernel_size = j.value("kernel_size", c.kernel_size);
  c.use_akab = j.value("use_akab", c.use_akab);
  c.use_kad = j.value("use_kad", c.use_kad);
  c.use_pyramid = j.value("use_pyramid", c.use_pyramid);
  c.use_rcab = j.value("use_rcab", c.use_rcab);
  c.init_seed = j.value("init_seed", c.init_seed);
  c.validate();
  return c;
}

Json train_config_to_json(const TrainConfig& c) {
  Json j;
  j["lr"] = c.lr;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["eps"] = c.eps;
  j["halve_every"] = c.halve_every;
  j["batch_size"] = c.batch_size;
  j["n_frames"] = c.n_frames;
  j["kernel_loss_weight"] = c.kernel_loss_weight;
  j["epochs"] = c.epochs;
  j["max_steps"] = c.max_steps;
  j["crop"] = c.crop;
  j["val_fraction"] = c.val_fraction;
  j["checkpoint_every"] = c.checkpoint_every;
  j["seed"] = c.seed;
  j["deterministic"] = c.deterministic;
  j["freeze_estimator"] = c.freeze_estimator;
  return j;
}

TrainConfig train_config_from_json(const Json& j) {
  check_keys(j,
             {"lr", "beta1", "beta2", "eps", "halve_every", "batch_size", "n_frames",
              "kernel_loss_weight", "epochs", "max_steps", "crop", "val_fraction",
              "checkpoint_every", "seed", "deterministic", "freeze_estimator"},
             "train");
  TrainConfig c;
  c.lr = j.value("lr", c.lr);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.eps = j.value("eps", c.eps);
  c.halve_every = j.value("halve_every", c.halve_every);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.n_frames = j.value("n_frames", c.n_frames);
  c.kernel_loss_weight = j.value("kernel_loss_weight", c.kernel_loss_weight);
  c.epochs = j.value("epochs", c.epochs);
  c.max_steps = j.value("max_steps", c.max_steps);
  c.crop = j.value("crop", c.crop);
  c.val_fraction = j.value("val_fraction", c.val_fraction);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.seed = j.value("seed", c.seed);
  c.deterministic = j.value("deterministic", c.deterministic);
  c.freeze_estimator = j.value("freeze_estimator", c.freeze_estimator);
  c.validate();
  return c;
}

}  // namespace kburst
