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
#include <string>
#include <vector>

#include "kburst/metrics.hpp"
#include "kburst/model.hpp"

namespace kburst {

struct TrainConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int halve_every = 100;            // epochs between learning-rate halvings
  int batch_size = 4;
  int n_frames = 8;
  double kernel_loss_weight = 1.0;  // lambda in the joint loss
  int epochs = 1;
  int64_t max_steps = 0;            // optional hard step cap (0: epochs decide)
  int crop = 32;                    // raw-space square crop, even; 0 = full frames
  double val_fraction = 0.125;      // held-out tail of the sample list
  int checkpoint_every = 0;         // steps; 0 = final checkpoint only
  uint64_t seed = 0;
  bool deterministic = true;
  bool freeze_estimator = false;    // finetune protocol: restorer only

  void validate() const;
};

/// lr(epoch) = lr * 0.5^floor(epoch / halve_every), exact.
double lr_at_epoch(const TrainConfig& cfg, int64_t epoch);

bool is_estimator_param(const std::string& name);

/// Mean absolute error (the image reconstruction loss).
double sr_loss(const RgbImage& a, const RgbImage& b);
/// Per-frame mean absolute kernel error, averaged over frames.
double kernel_loss(const std::vector<BlurKernel>& estimated,
                   const std::vector<BlurKernel>& truth);

/// One Adam update from the accumulated grads; increments adam.step. Frozen
/// estimator parameters are skipped entirely (values and moments untouched).
template <typename T>
void adam_step(ParamStore<T>& store, AdamState<T>& adam, double lr, const TrainConfig& cfg);

struct TrainResult {
  int64_t steps = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double final_val_psnr = 0.0;
  std::string checkpoint_path;
  std::string log_path;
};

/// Runs the optimization loop on a synthesized dataset directory. Appends
/// `step,epoch,lr,sr_loss,kernel_loss,val_psnr` rows to train_log.csv in
/// out_dir and writes checkpoint_final.tns (plus periodic checkpoints).
/// start_step/adam_in resume a previous run. Aborts with the offending batch
/// seed if the loss goes non-finite.
TrainResult train_model(Model<float>& model, const std::string& data_dir,
                        const TrainConfig& cfg, const std::string& out_dir,
                        int64_t start_step = 0, AdamState<float>* adam_in = nullptr);

/// PSNR/SSIM of model outputs against ground truth over a dataset.
/// n_frames = 0 uses every stored frame; otherwise the first n_frames.
MetricReport evaluate_model(Model<float>& model, const std::string& data_dir, int n_frames = 0);

}  // namespace kburst
