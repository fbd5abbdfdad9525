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

#include <functional>
#include <vector>

#include "kburst/tensor.hpp"

namespace kburst {

/// Reverse-mode tape. Nodes are created in forward order; backward() seeds
/// the root gradient with ones and replays the closures in reverse creation
/// order (a valid topological order by construction).
///
/// Instantiated for float (training, matches f32 checkpoint storage) and
/// double (finite-difference gradient checks).
template <typename T>
class Tape {
 public:
  using Back = std::function<void(Tape&)>;

  int push(TensorT<T> value, Back back = {});

  TensorT<T>& val(int id) { return nodes_[static_cast<size_t>(id)].value; }
  const TensorT<T>& val(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  TensorT<T>& grad(int id) { return nodes_[static_cast<size_t>(id)].grad; }
  const TensorT<T>& grad(int id) const { return nodes_[static_cast<size_t>(id)].grad; }

  void backward(int root);
  int size() const { return static_cast<int>(nodes_.size()); }
  void reset() { nodes_.clear(); }

 private:
  struct Node {
    TensorT<T> value;
    TensorT<T> grad;
    Back back;
  };
  std::vector<Node> nodes_;
};

// Graph inputs (parameters, detached constants): no backward closure; the
// gradient buffer is still filled so callers can read parameter grads.
template <typename T> int op_input(Tape<T>& t, TensorT<T> v);

// Elementwise / arithmetic.
template <typename T> int op_add(Tape<T>& t, int a, int b);
template <typename T> int op_add_scaled(Tape<T>& t, int a, int b, double sb);  // a + sb*b
template <typename T> int op_scale(Tape<T>& t, int a, double s);
template <typename T> int op_relu(Tape<T>& t, int a);
template <typename T> int op_sigmoid(Tape<T>& t, int a);

// conv2d: x (C,H,W), w (O,C,K,K), optional bias (O; pass -1 to skip), zero
// padding. Output (O, H', W') with H' = floor((H + 2p - K)/stride) + 1.
template <typename T>
int op_conv2d(Tape<T>& t, int x, int w, int b, int stride, int pad);

// linear: x (I), w (O,I), optional bias (O; -1 to skip).
template <typename T> int op_linear(Tape<T>& t, int x, int w, int b);

template <typename T> int op_gap(Tape<T>& t, int x);       // (C,H,W) -> (C)
template <typename T> int op_softmax(Tape<T>& t, int x);    // vector
template <typename T> int op_concat_vec(Tape<T>& t, const std::vector<int>& parts);
template <typename T> int op_concat_ch(Tape<T>& t, const std::vector<int>& parts);
template <typename T> int op_channel_scale(Tape<T>& t, int x, int s);  // s: (C)
template <typename T> int op_channel_bias(Tape<T>& t, int x, int b);   // b: (C)
template <typename T> int op_stretch(Tape<T>& t, int e, int64_t h, int64_t w);
template <typename T> int op_upsample2(Tape<T>& t, int x);  // bilinear x2, half-pixel centers
template <typename T> int op_pixel_shuffle(Tape<T>& t, int x, int r);
template <typename T> int op_mean(Tape<T>& t, const std::vector<int>& xs);
template <typename T> int op_reshape(Tape<T>& t, int x, std::vector<int64_t> shape);
template <typename T> int op_l1(Tape<T>& t, int a, int b);  // mean abs diff, scalar (1)

}  // namespace kburst
