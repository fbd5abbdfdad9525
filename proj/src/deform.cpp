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

#include "kburst/deform.hpp"

#include <cmath>
#include <stdexcept>

#include "kburst/rng.hpp"

namespace kburst {
namespace {

void check(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// The four bilinear corners of a fractional coordinate, with zero padding
// encoded as validity flags.
struct Corners {
  int64_t y0, x0;
  double fy, fx;
  bool v00, v01, v10, v11;
};

Corners corners_at(double y, double x, int64_t h, int64_t w) {
  Corners c;
  const double fy0 = std::floor(y);
  const double fx0 = std::floor(x);
  c.y0 = static_cast<int64_t>(fy0);
  c.x0 = static_cast<int64_t>(fx0);
  c.fy = y - fy0;
  c.fx = x - fx0;
  const bool y0in = c.y0 >= 0 && c.y0 < h;
  const bool y1in = c.y0 + 1 >= 0 && c.y0 + 1 < h;
  const bool x0in = c.x0 >= 0 && c.x0 < w;
  const bool x1in = c.x0 + 1 >= 0 && c.x0 + 1 < w;
  c.v00 = y0in && x0in;
  c.v01 = y0in && x1in;
  c.v10 = y1in && x0in;
  c.v11 = y1in && x1in;
  return c;
}

void check_deform_shapes(const std::vector<int64_t>& f, const std::vector<int64_t>& o,
                         const std::vector<int64_t>& w, int64_t bias_len) {
  check(f.size() == 3, "deform_conv: feature must be (C,H,W)");
  check(o.size() == 3 && o[0] == 18 && o[1] == f[1] && o[2] == f[2],
        "deform_conv: offsets must be (18,H,W) matching the feature");
  check(w.size() == 4 && w[1] == f[0] && w[2] == 3 && w[3] == 3,
        "deform_conv: weights must be (O,C,3,3)");
  check(bias_len < 0 || bias_len == w[0], "deform_conv: bias length must be O");
}

}  // namespace

template <typename T>
std::vector<T> bilinear_sample(const TensorT<T>& feature, double y, double x) {
  check(feature.rank() == 3, "bilinear_sample: expected (C,H,W)");
  const int64_t c = feature.dim(0), h = feature.dim(1), w = feature.dim(2);
  const Corners cr = corners_at(y, x, h, w);
  const T w00 = static_cast<T>((1 - cr.fy) * (1 - cr.fx));
  const T w01 = static_cast<T>((1 - cr.fy) * cr.fx);
  const T w10 = static_cast<T>(cr.fy * (1 - cr.fx));
  const T w11 = static_cast<T>(cr.fy * cr.fx);
  std::vector<T> out(static_cast<size_t>(c), T(0));
  for (int64_t i = 0; i < c; ++i) {
    T acc = T(0);
    if (cr.v00) acc += w00 * feature.at3(i, cr.y0, cr.x0);
    if (cr.v01) acc += w01 * feature.at3(i, cr.y0, cr.x0 + 1);
    if (cr.v10) acc += w10 * feature.at3(i, cr.y0 + 1, cr.x0);
    if (cr.v11) acc += w11 * feature.at3(i, cr.y0 + 1, cr.x0 + 1);
    out[static_cast<size_t>(i)] = acc;
  }
  return out;
}

template <typename T>
TensorT<T> deform_conv(const TensorT<T>& feature, const TensorT<T>& offsets,
                       const TensorT<T>& weights, const TensorT<T>& bias) {
  check_deform_shapes(feature.shape(), offsets.shape(), weights.shape(),
                      bias.numel() > 0 ? bias.dim(0) : -1);
  const int64_t c = feature.dim(0), h = feature.dim(1), w = feature.dim(2);
  const int64_t o = weights.dim(0);
  TensorT<T> out({o, h, w});
  const bool with_bias = bias.numel() > 0;
  std::vector<T> sampled(static_cast<size_t>(c * 9));

  for (int64_t py = 0; py < h; ++py) {
    for (int64_t px = 0; px < w; ++px) {
      // Gather the 9 deformed taps for every input channel.
      for (int64_t m = 0; m < 9; ++m) {
        const double sy = py + (m / 3 - 1) + static_cast<double>(offsets.at3(2 * m, py, px));
        const double sx = px + (m % 3 - 1) + static_cast<double>(offsets.at3(2 * m + 1, py, px));
        const Corners cr = corners_at(sy, sx, h, w);
        const T w00 = static_cast<T>((1 - cr.fy) * (1 - cr.fx));
        const T w01 = static_cast<T>((1 - cr.fy) * cr.fx);
        const T w10 = static_cast<T>(cr.fy * (1 - cr.fx));
        const T w11 = static_cast<T>(cr.fy * cr.fx);
        for (int64_t i = 0; i < c; ++i) {
          T acc = T(0);
          if (cr.v00) acc += w00 * feature.at3(i, cr.y0, cr.x0);
          if (cr.v01) acc += w01 * feature.at3(i, cr.y0, cr.x0 + 1);
          if (cr.v10) acc += w10 * feature.at3(i, cr.y0 + 1, cr.x0);
          if (cr.v11) acc += w11 * feature.at3(i, cr.y0 + 1, cr.x0 + 1);
          sampled[static_cast<size_t>(i * 9 + m)] = acc;
        }
      }
      for (int64_t j = 0; j < o; ++j) {
        T acc = with_bias ? bias[j] : T(0);
        const T* wp = weights.data() + j * c * 9;
        for (int64_t i = 0; i < c * 9; ++i) acc += wp[i] * sampled[static_cast<size_t>(i)];
        out.at3(j, py, px) = acc;
      }
    }
  }
  return out;
}

template <typename T>
void deform_conv_backward(const TensorT<T>& feature, const TensorT<T>& offsets,
                          const TensorT<T>& weights, const TensorT<T>& gout,
                          TensorT<T>* dfeature, TensorT<T>* doffsets,
                          TensorT<T>* dweights, TensorT<T>* dbias) {
  check_deform_shapes(feature.shape(), offsets.shape(), weights.shape(), -1);
  const int64_t c = feature.dim(0), h = feature.dim(1), w = feature.dim(2);
  const int64_t o = weights.dim(0);
  check(gout.rank() == 3 && gout.dim(0) == o && gout.dim(1) == h && gout.dim(2) == w,
        "deform_conv_backward: bad upstream gradient shape");

  for (int64_t py = 0; py < h; ++py) {
    for (int64_t px = 0; px < w; ++px) {
      for (int64_t m = 0; m < 9; ++m) {
        const double sy = py + (m / 3 - 1) + static_cast<double>(offsets.at3(2 * m, py, px));
        const double sx = px + (m % 3 - 1) + static_cast<double>(offsets.at3(2 * m + 1, py, px));
        const Corners cr = corners_at(sy, sx, h, w);
        const T w00 = static_cast<T>((1 - cr.fy) * (1 - cr.fx));
        const T w01 = static_cast<T>((1 - cr.fy) * cr.fx);
        const T w10 = static_cast<T>(cr.fy * (1 - cr.fx));
        const T w11 = static_cast<T>(cr.fy * cr.fx);
        T acc_dy = T(0), acc_dx = T(0);
        for (int64_t i = 0; i < c; ++i) {
          // dcol: upstream gradient reaching this (channel, tap) sample.
          T gs = T(0);
          for (int64_t j = 0; j < o; ++j)
            gs += gout.at3(j, py, px) * weights[((j * c + i) * 3 + m / 3) * 3 + m % 3];

          const T v00 = cr.v00 ? feature.at3(i, cr.y0, cr.x0) : T(0);
          const T v01 = cr.v01 ? feature.at3(i, cr.y0, cr.x0 + 1) : T(0);
          const T v10 = cr.v10 ? feature.at3(i, cr.y0 + 1, cr.x0) : T(0);
          const T v11 = cr.v11 ? feature.at3(i, cr.y0 + 1, cr.x0 + 1) : T(0);

          if (dfeature) {
            if (cr.v00) dfeature->at3(i, cr.y0, cr.x0) += gs * w00;
            if (cr.v01) dfeature->at3(i, cr.y0, cr.x0 + 1) += gs * w01;
            if (cr.v10) dfeature->at3(i, cr.y0 + 1, cr.x0) += gs * w10;
            if (cr.v11) dfeature->at3(i, cr.y0 + 1, cr.x0 + 1) += gs * w11;
          }
          if (doffsets) {
            const T fy = static_cast<T>(cr.fy), fx = static_cast<T>(cr.fx);
            acc_dy += gs * ((T(1) - fx) * (v10 - v00) + fx * (v11 - v01));
            acc_dx += gs * ((T(1) - fy) * (v01 - v00) + fy * (v11 - v10));
          }
          if (dweights) {
            T s = w00 * v00 + w01 * v01 + w10 * v10 + w11 * v11;
            for (int64_t j = 0; j < o; ++j)
              (*dweights)[((j * c + i) * 3 + m / 3) * 3 + m % 3] += gout.at3(j, py, px) * s;
          }
        }
        if (doffsets) {
          doffsets->at3(2 * m, py, px) += acc_dy;
          doffsets->at3(2 * m + 1, py, px) += acc_dx;
        }
      }
      if (dbias) {
        for (int64_t j = 0; j < o; ++j) (*dbias)[j] += gout.at3(j, py, px);
      }
    }
  }
}

template <typename T>
int op_deform_conv(Tape<T>& t, int feature, int offsets, int weights, int bias) {
  static const TensorT<T> kNoBias;
  TensorT<T> out = deform_conv(t.val(feature), t.val(offsets), t.val(weights),
                               bias >= 0 ? t.val(bias) : kNoBias);
  const int id = t.size();
  return t.push(std::move(out), [feature, offsets, weights, bias, id](Tape<T>& tp) {
    deform_conv_backward(tp.val(feature), tp.val(offsets), tp.val(weights), tp.grad(id),
                         &tp.grad(feature), &tp.grad(offsets), &tp.grad(weights),
                         bias >= 0 ? &tp.grad(bias) : nullptr);
  });
}

double deform_conv_grad_check(int64_t c_in, int64_t c_out, int64_t h, int64_t w,
                              uint64_t seed) {
  using D = TensorT<double>;
  Rng rng(derive_seed(seed, {0xdc09u}));
  D feature({c_in, h, w});
  for (int64_t i = 0; i < feature.numel(); ++i) feature[i] = rng.normal();
  D offsets({18, h, w});
  // Fractional parts kept in [0.1, 0.9]: bilinear sampling is non-smooth at
  // integer coordinates, where central differences straddle the kink.
  for (int64_t i = 0; i < offsets.numel(); ++i) {
    const double base = rng.uniform() < 0.5 ? -1.0 : 0.0;
    offsets[i] = base + 0.1 + 0.8 * rng.uniform();
  }
  D weights({c_out, c_in, 3, 3});
  for (int64_t i = 0; i < weights.numel(); ++i) weights[i] = rng.normal() * 0.5;
  D bias({c_out});
  for (int64_t i = 0; i < bias.numel(); ++i) bias[i] = rng.normal() * 0.1;

  // Scalar objective: random projection of the output.
  D proj({c_out, h, w});
  for (int64_t i = 0; i < proj.numel(); ++i) proj[i] = rng.normal();
  auto objective = [&](const D& f, const D& off, const D& wt) {
    const D out = deform_conv(f, off, wt, bias);
    double acc = 0.0;
    for (int64_t i = 0; i < out.numel(); ++i) acc += proj[i] * out[i];
    return acc;
  };

  D dfeature(feature.shape()), doffsets(offsets.shape()), dweights(weights.shape());
  deform_conv_backward<double>(feature, offsets, weights, proj, &dfeature, &doffsets,
                               &dweights, nullptr);

  const double step = 1e-5;
  double max_rel = 0.0;
  auto probe = [&](D& tensor, const D& analytic) {
    for (int64_t i = 0; i < tensor.numel(); ++i) {
      const double saved = tensor[i];
      tensor[i] = saved + step;
      const double hi = objective(feature, offsets, weights);
      tensor[i] = saved - step;
      const double lo = objective(feature, offsets, weights);
      tensor[i] = saved;
      const double fd = (hi - lo) / (2.0 * step);
      const double rel =
          std::abs(fd - analytic[i]) / std::max({1e-6, std::abs(fd), std::abs(analytic[i])});
      max_rel = std::max(max_rel, rel);
    }
  };
  probe(feature, dfeature);
  probe(offsets, doffsets);
  probe(weights, dweights);
  return max_rel;
}

// ---- explicit instantiations ----
#define KBURST_INSTANTIATE_DEFORM(T)                                                     \
  template std::vector<T> bilinear_sample<T>(const TensorT<T>&, double, double);         \
  template TensorT<T> deform_conv<T>(const TensorT<T>&, const TensorT<T>&,               \
                                     const TensorT<T>&, const TensorT<T>&);              \
  template void deform_conv_backward<T>(const TensorT<T>&, const TensorT<T>&,            \
                                        const TensorT<T>&, const TensorT<T>&,            \
                                        TensorT<T>*, TensorT<T>*, TensorT<T>*,           \
                                        TensorT<T>*);                                    \
  template int op_deform_conv<T>(Tape<T>&, int, int, int, int);

KBURST_INSTANTIATE_DEFORM(float)
KBURST_INSTANTIATE_DEFORM(double)
#undef KBURST_INSTANTIATE_DEFORM

}  // namespace kburst
