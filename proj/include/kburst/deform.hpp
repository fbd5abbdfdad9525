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
#include <vector>

#include "kburst/autograd.hpp"
#include "kburst/tensor.hpp"

namespace kburst {

/// Zero-padded bilinear lookup: neighbors outside [0,H-1]x[0,W-1] contribute
/// zero. Returns one value per channel.
template <typename T>
std::vector<T> bilinear_sample(const TensorT<T>& feature, double y, double x);

/// Offset-only deformable 3x3 convolution, stride 1, one group.
/// feature (C,H,W); offsets (18,H,W) ordered tap-major, (dy, dx) per tap with
/// taps scanned row-major over the 3x3 grid; weights (O,C,3,3); bias (O) or
/// empty. Output (O,H,W).
template <typename T>
TensorT<T> deform_conv(const TensorT<T>& feature, const TensorT<T>& offsets,
                       const TensorT<T>& weights, const TensorT<T>& bias);

/// Accumulates analytic gradients for deform_conv given upstream grad gout.
/// Any of the output pointers may be null to skip that path.
template <typename T>
void deform_conv_backward(const TensorT<T>& feature, const TensorT<T>& offsets,
                          const TensorT<T>& weights, const TensorT<T>& gout,
                          TensorT<T>* dfeature, TensorT<T>* doffsets,
                          TensorT<T>* dweights, TensorT<T>* dbias);

/// Tape node; pass bias = -1 to run without bias.
template <typename T>
int op_deform_conv(Tape<T>& t, int feature, int offsets, int weights, int bias);

/// Central-difference check (step 1e-5) of the feature/offset/weight gradient
/// paths on a random double-precision instance whose sampling coordinates are
/// kept away from integer kinks. Returns the max relative error.
double deform_conv_grad_check(int64_t c_in, int64_t c_out, int64_t h, int64_t w,
                              uint64_t seed);

}  // namespace kburst
