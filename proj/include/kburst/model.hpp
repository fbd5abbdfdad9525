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
#include <map>
#include <string>
#include <vector>

#include "kburst/autograd.hpp"
#include "kburst/image.hpp"
#include "kburst/kernels.hpp"
#include "kburst/tensor.hpp"

namespace kburst {

/// Restorer + estimator configuration. The four toggles span the ablation
/// ladder used in experiments:
///   A: all off (plain residual extractor, single-level offset alignment from
///      features only, plain residual reconstruction)
///   B: +use_akab   C: +use_rcab   D: +use_kad   E: +use_pyramid (full model)
struct ModelConfig {
  int base_channels = 32;
  int n_akab = 5;
  int n_rcab = 5;
  int pyramid_levels = 3;  // fixed at 3 when use_pyramid is on
  int embed_t = 15;
  int scale = 4;
  int kernel_size = 31;
  bool use_akab = true;
  bool use_kad = true;
  bool use_pyramid = true;
  bool use_rcab = true;
  uint64_t init_seed = 1234;

  void validate() const;
};

/// Applies the ablation ladder toggles for variant 'A'..'E' on top of base.
ModelConfig ablation_variant(ModelConfig base, char variant);

/// Named persistent parameters. Values survive across steps; grads are
/// (re)accumulated per step. After a checkpoint load the store is sealed:
/// forward passes may no longer create parameters, so a config/checkpoint
/// mismatch fails loudly instead of spawning fresh weights.
template <typename T>
struct ParamStore {
  std::map<std::string, TensorT<T>> values;
  std::map<std::string, TensorT<T>> grads;
  uint64_t init_seed = 0;
  bool sealed = false;

  void zero_grads();
  int64_t total_parameters() const;
};

enum class Init { kZero, kHe };

template <typename T>
struct AdamState {
  std::map<std::string, TensorT<T>> m, v;
  int64_t step = 0;
};

template <typename T>
struct Model {
  ModelConfig cfg;
  KernelPca pca;           // embedding basis; checkpoints are bound to its hash
  uint64_t pca_hash = 0;
  ParamStore<T> store;
};

template <typename T>
Model<T> make_model(const ModelConfig& cfg, KernelPca pca, uint64_t pca_hash);

/// RGGB 1-channel frame packed to 4 planes [R, G1, G2, B] at half resolution.
template <typename T>
TensorT<T> pack_raw(const RawImage& raw);

template <typename T>
TensorT<T> image_to_chw(const RgbImage& img);
template <typename T>
RgbImage chw_to_image(const TensorT<T>& t);

/// Tape ids of the forward outputs. param_leaves maps each parameter used by
/// this pass to its input node, so a trainer can accumulate leaf grads into
/// the store after backward().
struct BurstForward {
  int sr = -1;                 // (3, scale*h, scale*w)
  std::vector<int> kernels;    // per frame, (ks, ks), on the simplex
  std::map<std::string, int> param_leaves;
};

/// Full forward: per-frame kernel estimation -> PCA embedding (detached, so
/// estimator gradients come only from the kernel loss) -> feature extraction
/// -> alignment to frame 0 -> mean fusion -> reconstruction.
template <typename T>
BurstForward model_forward(Model<T>& m, Tape<T>& tape,
                           const std::vector<TensorT<T>>& packed_frames);

/// Convenience inference wrapper (no gradient use).
template <typename T>
std::pair<RgbImage, std::vector<BlurKernel>> model_infer(
    Model<T>& m, const std::vector<RawImage>& frames);

/// Checkpoint I/O. Parameters are stored as f32 ("param.<name>"), optimizer
/// moments as "adam_m./adam_v.<name>"; meta carries the model config, step and
/// the PCA basis hash. Loading verifies the hash and hard-errors on mismatch.
template <typename T>
void save_checkpoint(const std::string& path, const Model<T>& m, int64_t step,
                     const AdamState<T>* adam);

template <typename T>
struct LoadedCheckpoint {
  Model<T> model;
  int64_t step = 0;
  AdamState<T> adam;
  bool has_adam = false;
};

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::string& path, KernelPca pca,
                                    uint64_t pca_hash);

}  // namespace kburst
