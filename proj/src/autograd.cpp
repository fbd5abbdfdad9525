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

#include "kburst/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace kburst {
namespace {

void check(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using MapRM = Eigen::Map<RowMat<T>>;
template <typename T>
using CMapRM = Eigen::Map<const RowMat<T>>;

template <typename T>
void im2col(const TensorT<T>& x, int64_t k, int64_t stride, int64_t pad, int64_t ho,
            int64_t wo, std::vector<T>& col) {
  const int64_t c_in = x.dim(0), h = x.dim(1), w = x.dim(2);
  col.assign(static_cast<size_t>(c_in * k * k * ho * wo), T(0));
  int64_t row = 0;
  for (int64_t c = 0; c < c_in; ++c) {
    for (int64_t u = 0; u < k; ++u) {
      for (int64_t v = 0; v < k; ++v, ++row) {
        T* dst = col.data() + row * ho * wo;
        for (int64_t oy = 0; oy < ho; ++oy) {
          const int64_t iy = oy * stride - pad + u;
          if (iy < 0 || iy >= h) continue;  // stays zero
          for (int64_t ox = 0; ox < wo; ++ox) {
            const int64_t ix = ox * stride - pad + v;
            if (ix >= 0 && ix < w) dst[oy * wo + ox] = x.at3(c, iy, ix);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const std::vector<T>& col, int64_t k, int64_t stride, int64_t pad,
                int64_t ho, int64_t wo, TensorT<T>& dx) {
  const int64_t c_in = dx.dim(0), h = dx.dim(1), w = dx.dim(2);
  int64_t row = 0;
  for (int64_t c = 0; c < c_in; ++c) {
    for (int64_t u = 0; u < k; ++u) {
      for (int64_t v = 0; v < k; ++v, ++row) {
        const T* src = col.data() + row * ho * wo;
        for (int64_t oy = 0; oy < ho; ++oy) {
          const int64_t iy = oy * stride - pad + u;
          if (iy < 0 || iy >= h) continue;
          for (int64_t ox = 0; ox < wo; ++ox) {
            const int64_t ix = ox * stride - pad + v;
            if (ix >= 0 && ix < w) dx.at3(c, iy, ix) += src[oy * wo + ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
int Tape<T>::push(TensorT<T> value, Back back) {
  Node n;
  n.grad = TensorT<T>(value.shape());
  n.value = std::move(value);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

template <typename T>
void Tape<T>::backward(int root) {
  check(root >= 0 && root < size(), "tape: bad backward root");
  nodes_[static_cast<size_t>(root)].grad.fill(T(1));
  for (int i = root; i >= 0; --i) {
    auto& n = nodes_[static_cast<size_t>(i)];
    if (n.back) n.back(*this);
  }
}

template <typename T>
int op_input(Tape<T>& t, TensorT<T> v) {
  return t.push(std::move(v));
}

template <typename T>
int op_add(Tape<T>& t, int a, int b) {
  check(t.val(a).same_shape(t.val(b)), "add: shape mismatch");
  TensorT<T> out = t.val(a);
  const TensorT<T>& vb = t.val(b);
  for (int64_t i = 0; i < out.numel(); ++i) out[i] += vb[i];
  const int id = t.size();
  return t.push(std::move(out), [a, b, id](Tape<T>& tp) {
    const TensorT<T>& g = tp.grad(id);
    TensorT<T>& ga = tp.grad(a);
    TensorT<T>& gb = tp.grad(b);
    for (int64_t i = 0; i < g.numel(); ++i) {
      ga[i] += g[i];
      gb[i] += g[i];
    }
  });
}

template <typename T>
int op_add_scaled(Tape<T>& t, int a, int b, double sb) {
  check(t.val(a).same_shape(t.val(b)), "add_scaled: shape mismatch");
  const T sbt = static_cast<T>(sb);
  TensorT<T> out = t.val(a);
  const TensorT<T>& vb = t.val(b);
  for (int64_t i = 0; i < out.numel(); ++i) out[i] += sbt * vb[i];
  const int id = t.size();
  return t.push(std::move(out), [a, b, sbt, id](Tape<T>& tp) {
    const TensorT<T>& g = tp.grad(id);
    TensorT<T>& ga = tp.grad(a);
    TensorT<T>& gb = tp.grad(b);
    for (int64_t i = 0; i < g.numel(); ++i) {
      ga[i] += g[i];
      gb[i] += sbt * g[i];
    }
  });
}

template <typename T>
int op_scale(Tape<T>& t, int a, double s) {
  const T st = static_cast<T>(s);
  TensorT<T> out = t.val(a);
  for (int64_t i = 0; i < out.numel(); ++i) out[i] *= st;
  const int id = t.size();
  return t.push(std::move(out), [a, st, id](Tape<T>& tp) {
    const TensorT<T>& g = tp.grad(id);
    TensorT<T>& ga = tp.grad(a);
    for (int64_t i = 0; i < g.numel(); ++i) ga[i] += st * g[i];
  });
}

template <typename T>
int op_relu(Tape<T>& t, int a) {
  TensorT<T> out = t.val(a);
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::max(out[i], T(0));
  const int id = t.size();
  return t.push(std::move(out), [a, id](Tape<T>& tp) {
    const TensorT<T>& g = tp.grad(id);
    const TensorT<T>& x = tp.val(a);
    TensorT<T>& ga = tp.grad(a);
    for (int64_t i = 0; i < g.numel(); ++i)
      if (x[i] > T(0)) ga[i] += g[i];
  });
}

template <typename T>
int op_sigmoid(Tape<T>& t, int a) {
  TensorT<T> out = t.val(a);
  for (int64_t i = 0; i < out.numel(); ++i)
    out[i] = T(1) / (T(1) + std::exp(-out[i]));
  const int id = t.size();
  return t.push(std::move(out), [a, id](Tape<T>& tp) {
    const TensorT<T>& g = tp.grad(id);
    const TensorT<T>& y = tp.val(id);
    TensorT<T>& ga = tp.grad(a);
    for (int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * y[i] * (T(1) - y[i]);
  });
}

template <typename T>
int op_conv2d(Tape<T>& t, int x, int w, int b, int stride, int pad) {
  const TensorT<T>& xv = t.val(x);
  const TensorT<T>& wv = t.val(w);
  check(xv.rank() == 3 && wv.rank() == 4, "conv2d: expected x (C,H,W), w (O,C,K,K)");
  check(wv.dim(1) == xv.dim(0), "conv2d: channel mismatch");
  check(wv.dim(2) == wv.dim(3), "conv2d: kernel must be square");
  check(stride >= 1 && pad >= 0, "conv2d: bad stride/pad");
  const int64_t c_in = xv.dim(0), h = xv.dim(1), wd = xv.dim(2);
  const int64_t o = wv.dim(0), k = wv.dim(2);
  const int64_t ho = (h + 2 * pad - k) / stride + 1;
  const int64_t wo = (wd + 2 * pad - k) / stride + 1;
  check(ho >= 1 && wo >= 1, "conv2d: output would be empty");
  if (b >= 0) check(t.val(b).rank() == 1 && t.val(b).dim(0) == o, "conv2d: bad bias shape");

  std::vector<T> col;
  im2col(xv, k, stride, pad, ho, wo, col);
  TensorT<T> out({o, ho, wo});
  {
    CMapRM<T> wm(wv.data(), o, c_in * k * k);
    CMapRM<T> cm(col.data(), c_in * k * k, ho * wo);
    MapRM<T> om(out.data(), o, ho * wo);
    om.noalias() = wm * cm;
  }
  if (b >= 0) {
    const TensorT<T>& bv = t.val(b);
    for (int64_t c = 0; c < o; ++c) {
      T* row = out.data() + c * ho * wo;
      for (int64_t p = 0; p < ho * wo; ++p) row[p] += bv[c];
    }
  }

  const int id = t.size();
  return t.push(std::move(out), [x, w, b, stride, pad, k, ho, wo, id](Tape<T>& tp) {
    const TensorT<T>& g = tp.grad(id);
    const TensorT<T>& xv2 = tp.val(x);
    const TensorT<T>& wv2 = tp.val(w);
    const int64_t o2 = wv2.dim(0), c2 = xv2.dim(0);

    std::vector<T> col2;
    im2col(xv2, k, stride, pad, ho, wo, col2);  // recomputed to keep closures small

    CMapRM<T> gm(g.data(), o2, ho * wo);
    {
      MapRM<T> dwm(tp.grad(w).data(), o2, c2 * k * k);
      CMapRM<T> cm(col2.data(), c2 * k * k, ho * wo);
      dwm.noalias() += gm * cm.transpose();
    }
    {
      std::vector<T> dcol(static_cast<size_t>(c2 * k * k * ho * wo));
      MapRM<T> dcm(dcol.data(), c2 * k * k, ho * wo);
      CMapRM<T> wm(wv2.data(), o2, c2 * k * k);
      dcm.noalias() = wm.transpose() * gm;
      col2im_add(dcol, k, stride, pad, ho, wo, tp.grad(x));
    }
    if (b >= 0) {
      TensorT<T>& db = tp.grad(b);
      for (int64_t c = 0; c < o2; ++c) {
        const T* row = g.data() + c * ho * wo;
        T acc = T(0);
        for (int64_t p = 0; p < ho * wo; ++p) acc += row[p];
        db[c] += acc;
      }
    }
  });
}

template <typename T>
int op_linear(Tape<T>& t, int x, int w, int b) {
  const TensorT<T>& xv = t.val(x);
  const TensorT<T>& wv = t.val(w);
  check(xv.rank() == 1 && wv.rank() == 2, "linear: expected x (I), w (O,I)");
  check(wv.dim(1) == xv.dim(0), "linear: dimension mismatch");
  const int64_t o = wv.dim(0), in = wv.dim(1);
  if (b >= 0) check(t.val(b).rank() == 1 && t.val(b).dim(0) == o, "linear: bad bias shape");

  TensorT<T> out({o});
  for (int64_t r = 0; r < o; ++r) {
    T acc = b >= 0 ? t.val(b)[r] : T(0);
    const T* wr = wv.data() + r * in;
    for (int64_t c = 0; c < in; ++c) acc += wr[c] * xv[c];
    out[r] = acc;
  }
  const int id = t.size();
  return t.push(std::move(out), [x, w, b, o, in, id](Tape<T>& tp) {
    const TensorT<T>& g = tp.grad(id);
    const TensorT<T>& xv2 = tp.val(x);
    const TensorT<T>& wv2 = tp.val(w);
    TensorT<T>& dx = tp.grad(x);
    TensorT<T>& dw = tp.grad(w);
    for (int64_t r = 0; r < o; ++r) {
      const T gr = g[r];
      const T* wr = wv2.data() + r * in;
      T* dwr = dw.data() + r * in;
      for (int64_t c = 0; c < in; ++c) {
        dx[c] += gr * wr[c];
        dwr[c] += gr * xv2[c];
      }
    }
    if (b >= 0) {
      TensorT<T>& db = tp.grad(b);
      for (int64_t r = 0; r < o; ++r) db[r] += g[r];
    }
  });
}

template <typename T>
int op_gap(Tape<T>& t, int x) {
  const TensorT<T>& xv = t.val(x);
  check(xv.rank() == 3, "gap: expected (C,H,W)");
  const int64_t c = xv.dim(0), hw = xv.dim(1) * xv.dim(2);
  TensorT<T> out({c});
  for (int64_t i = 0; i < c; ++i) {
    T acc = T(0);
    const T* p = xv.data() + i * hw;
    for (int64_t j = 0; j < hw; ++j) acc += p[j];
    out[i] = acc / static_cast<T>(hw);
  }
  const int id = t.size();
  return t.push(std::move(out), [x, c, hw, id](Tape<T>& tp) {
    const TensorT<T>& g = tp.grad(id);
    TensorT<T>& dx = tp.grad(x);
    for (int64_t i = 0; i < c; ++i) {
      const T gi = g[i] / static_cast<T>(hw);
      T* p = dx.data() + i * hw;
      for (int64_t j = 0; j < hw; ++j) p[j] += gi;
    }
  });
}

template <typename T>
int op_softmax(Tape<T>& t, int x) {
  const TensorT<T>& xv = t.val(x);
  check(xv.rank() == 1, "softmax: expected a vector");
  const int64_t n = xv.dim(0);
  TensorT<T> out({n});
  T mx = xv[0];
  for (int64_t i = 1; i < n; ++i) mx = std::max(mx, xv[i]);
  T sum = T(0);
  for (int64_t i = 0; i < n; ++i) {
    out[i] = std::exp(xv[i] - mx);
    sum += out[i];
  }
  for (int64_t i = 0; i < n; ++i) out[i] /= sum;
  const int id = t.size();
  return t.push(std::move(out), [x, n, id](Tape<T>& tp) {
    const TensorT<T>& g = tp.grad(id);
    const TensorT<T>& y = tp.val(id);
    TensorT<T>& dx = tp.grad(x);
    T dot = T(0);
    for (int64_t i = 0; i < n; ++i) dot += g[i] * y[i];
    for (int64_t i = 0; i < n; ++i) dx[i] += y[i] * (g[i] - dot);
  });
}

template <typename T>
int op_concat_vec(Tape<T>& t, const std::vector<int>& parts) {
  check(!parts.empty(), "concat_vec: empty");
  int64_t n = 0;
  for (int p : parts) {
    check(t.val(p).rank() == 1, "concat_vec: expected vectors");
    n += t.val(p).dim(0);
  }
  TensorT<T> out({n});
  int64_t off = 0;
  for (int p : parts) {
    const TensorT<T>& v = t.val(p);
    std::copy(v.data(), v.data() + v.numel(), out.data() + off);
    off += v.numel();
  }
  const int id = t.size();
  return t.push(std::move(out), [parts, id](Tape<T>& tp) {
    const TensorT<T>& g = tp.grad(id);
    int64_t off2 = 0;
    for (int p : parts) {
      TensorT<T>& dp = tp.grad(p);
      for (int64_t i = 0; i < dp.numel(); ++i) dp[i] += g[off2 + i];
      off2 += dp.numel();
    }
  });
}

template <typename T>
int op_concat_ch(Tape<T>& t, const std::vector<int>& parts) {
  check(!parts.empty(), "concat_ch: empty");
  const int64_t h = t.val(parts[0]).dim(1), w = t.val(parts[0]).dim(2);
  int64_t c = 0;
  for (int p : parts) {
    const TensorT<T>& v = t.val(p);
    check(v.rank() == 3 && v.dim(1) == h && v.dim(2) == w, "concat_ch: spatial mismatch");
    c += v.dim(0);
  }
  TensorT<T> out({c, h, w});
  int64_t off = 0;
  for (int p : parts) {
    const TensorT<T>& v = t.val(p);
    std::copy(v.data(), v.data() + v.numel(), out.data() + off);
    off += v.numel();
  }
  const int id = t.size();
  return t.push(std::move(out), [parts, id](Tape<T>& tp) {
    const TensorT<T>& g = tp.grad(id);
    int64_t off2 = 0;
    for (int p : parts) {
      TensorT<T>& dp = tp.grad(p);
      for (int64_t i = 0; i < dp.numel(); ++i) dp[i] += g[off2 + i];
      off2 += dp.numel();
    }
  });
}

template <typename T>
int op_channel_scale(Tape<T>& t, int x, int s) {
  const TensorT<T>& xv = t.val(x);
  const TensorT<T>& sv = t.val(s);
  check(xv.rank() == 3 && sv.rank() == 1 && sv.dim(0) == xv.dim(0),
        "channel_scale: shapes inconsistent");
  const int64_t c = xv.dim(0), hw = xv.dim(1) * xv.dim(2);
  TensorT<T> out(xv.shape());
  for (int64_t i = 0; i < c; ++i) {
    const T si = sv[i];
    const T* p = xv.data() + i * hw;
    T* q = out.data() + i * hw;
    for (int64_t j = 0; j < hw; ++j) q[j] = si * p[j];
  }
  const int id = t.size();
  return t.push(std::move(out), [x, s, c, hw, id](Tape<T>& tp) {
    const TensorT<T>& g = tp.grad(id);
    const TensorT<T>& xv2 = tp.val(x);
    const TensorT<T>& sv2 = tp.val(s);
    TensorT<T>& dx = tp.grad(x);
    TensorT<T>& ds = tp.grad(s);
    for (int64_t i = 0; i < c; ++i) {
      const T si = sv2[i];
      const T* gp = g.data() + i * hw;
      const T* xp = xv2.data() + i * hw;
      T* dxp = dx.data() + i * hw;
      T acc = T(0);
      for (int64_t j = 0; j < hw; ++j) {
        dxp[j] += si * gp[j];
        acc += gp[j] * xp[j];
      }
      ds[i] += acc;
    }
  });
}

template <typename T>
int op_channel_bias(Tape<T>& t, int x, int b) {
  const TensorT<T>& xv = t.val(x);
  const TensorT<T>& bv = t.val(b);
  check(xv.rank() == 3 && bv.rank() == 1 && bv.dim(0) == xv.dim(0),
        "channel_bias: shapes inconsistent");
  const int64_t c = xv.dim(0), hw = xv.dim(1) * xv.dim(2);
  TensorT<T> out(xv.shape());
  for (int64_t i = 0; i < c; ++i) {
    const T bi = bv[i];
    const T* p = xv.data() + i * hw;
    T* q = out.data() + i * hw;
    for (int64_t j = 0; j < hw; ++j) q[j] = p[j] + bi;
  }
  const int id = t.size();
  return t.push(std::move(out), [x, b, c, hw, id](Tape<T>& tp) {
    const TensorT<T>& g = tp.grad(id);
    TensorT<T>& dx = tp.grad(x);
    TensorT<T>& db = tp.grad(b);
    for (int64_t i = 0; i < c; ++i) {
      const T* gp = g.data() + i * hw;
      T* dxp = dx.data() + i * hw;
      T acc = T(0);
      for (int64_t j = 0; j < hw; ++j) {
        dxp[j] += gp[j];
        acc += gp[j];
      }
      db[i] += acc;
    }
  });
}

template <typename T>
int op_stretch(Tape<T>& t, int e, int64_t h, int64_t w) {
  const TensorT<T>& ev = t.val(e);
  check(ev.rank() == 1 && h >= 1 && w >= 1, "stretch: expected a vector and valid dims");
  const int64_t c = ev.dim(0);
  TensorT<T> out({c, h, w});
  for (int64_t i = 0; i < c; ++i) {
    T* p = out.data() + i * h * w;
    std::fill(p, p + h * w, ev[i]);
  }
  const int id = t.size();
  return t.push(std::move(out), [e, c, h, w, id](Tape<T>& tp) {
    const TensorT<T>& g = tp.grad(id);
    TensorT<T>& de = tp.grad(e);
    for (int64_t i = 0; i < c; ++i) {
      const T* p = g.data() + i * h * w;
      T acc = T(0);
      for (int64_t j = 0; j < h * w; ++j) acc += p[j];
      de[i] += acc;
    }
  });
}

template <typename T>
int op_upsample2(Tape<T>& t, int x) {
  const TensorT<T>& xv = t.val(x);
  check(xv.rank() == 3, "upsample2: expected (C,H,W)");
  const int64_t c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  const int64_t ho = 2 * h, wo = 2 * w;
  TensorT<T> out({c, ho, wo});
  // Half-pixel centers: src = (dst + 0.5)/2 - 0.5, edges replicated.
  for (int64_t oy = 0; oy < ho; ++oy) {
    const double sy = (oy + 0.5) / 2.0 - 0.5;
    const int64_t y0 = static_cast<int64_t>(std::floor(sy));
    const double fy = sy - y0;
    const int64_t y0c = std::clamp<int64_t>(y0, 0, h - 1);
    const int64_t y1c = std::clamp<int64_t>(y0 + 1, 0, h - 1);
    for (int64_t ox = 0; ox < wo; ++ox) {
      const double sx = (ox + 0.5) / 2.0 - 0.5;
      const int64_t x0 = static_cast<int64_t>(std::floor(sx));
      const double fx = sx - x0;
      const int64_t x0c = std::clamp<int64_t>(x0, 0, w - 1);
      const int64_t x1c = std::clamp<int64_t>(x0 + 1, 0, w - 1);
      const T w00 = static_cast<T>((1 - fy) * (1 - fx));
      const T w01 = static_cast<T>((1 - fy) * fx);
      const T w10 = static_cast<T>(fy * (1 - fx));
      const T w11 = static_cast<T>(fy * fx);
      for (int64_t i = 0; i < c; ++i) {
        out.at3(i, oy, ox) = w00 * xv.at3(i, y0c, x0c) + w01 * xv.at3(i, y0c, x1c) +
                             w10 * xv.at3(i, y1c, x0c) + w11 * xv.at3(i, y1c, x1c);
      }
    }
  }
  const int id = t.size();
  return t.push(std::move(out), [x, c, h, w, ho, wo, id](Tape<T>& tp) {
    const TensorT<T>& g = tp.grad(id);
    TensorT<T>& dx = tp.grad(x);
    for (int64_t oy = 0; oy < ho; ++oy) {
      const double sy = (oy + 0.5) / 2.0 - 0.5;
      const int64_t y0 = static_cast<int64_t>(std::floor(sy));
      const double fy = sy - y0;
      const int64_t y0c = std::clamp<int64_t>(y0, 0, h - 1);
      const int64_t y1c = std::clamp<int64_t>(y0 + 1, 0, h - 1);
      for (int64_t ox = 0; ox < wo; ++ox) {
        const double sx = (ox + 0.5) / 2.0 - 0.5;
        const int64_t x0 = static_cast<int64_t>(std::floor(sx));
        const double fx = sx - x0;
        const int64_t x0c = std::clamp<int64_t>(x0, 0, w - 1);
        const int64_t x1c = std::clamp<int64_t>(x0 + 1, 0, w - 1);
        const T w00 = static_cast<T>((1 - fy) * (1 - fx));
        const T w01 = static_cast<T>((1 - fy) * fx);
        const T w10 = static_cast<T>(fy * (1 - fx));
        const T w11 = static_cast<T>(fy * fx);
        for (int64_t i = 0; i < c; ++i) {
          const T gi = g.at3(i, oy, ox);
          dx.at3(i, y0c, x0c) += w00 * gi;
          dx.at3(i, y0c, x1c) += w01 * gi;
          dx.at3(i, y1c, x0c) += w10 * gi;
          dx.at3(i, y1c, x1c) += w11 * gi;
        }
      }
    }
  });
}

template <typename T>
int op_pixel_shuffle(Tape<T>& t, int x, int r) {
  const TensorT<T>& xv = t.val(x);
  check(xv.rank() == 3 && r >= 1, "pixel_shuffle: expected (C*r^2,H,W)");
  const int64_t cin = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  check(cin % (static_cast<int64_t>(r) * r) == 0, "pixel_shuffle: channels not divisible by r^2");
  const int64_t c = cin / (static_cast<int64_t>(r) * r);
  TensorT<T> out({c, h * r, w * r});
  for (int64_t i = 0; i < c; ++i)
    for (int64_t oy = 0; oy < h * r; ++oy)
      for (int64_t ox = 0; ox < w * r; ++ox)
        out.at3(i, oy, ox) = xv.at3(i * r * r + (oy % r) * r + (ox % r), oy / r, ox / r);
  const int id = t.size();
  return t.push(std::move(out), [x, c, h, w, r, id](Tape<T>& tp) {
    const TensorT<T>& g = tp.grad(id);
    TensorT<T>& dx = tp.grad(x);
    for (int64_t i = 0; i < c; ++i)
      for (int64_t oy = 0; oy < h * r; ++oy)
        for (int64_t ox = 0; ox < w * r; ++ox)
          dx.at3(i * r * r + (oy % r) * r + (ox % r), oy / r, ox / r) += g.at3(i, oy, ox);
  });
}

template <typename T>
int op_mean(Tape<T>& t, const std::vector<int>& xs) {
  check(!xs.empty(), "mean: empty");
  TensorT<T> out = t.val(xs[0]);
  for (size_t i = 1; i < xs.size(); ++i) {
    const TensorT<T>& v = t.val(xs[i]);
    check(v.same_shape(out), "mean: shape mismatch");
    for (int64_t j = 0; j < out.numel(); ++j) out[j] += v[j];
  }
  const T inv = T(1) / static_cast<T>(xs.size());
  for (int64_t j = 0; j < out.numel(); ++j) out[j] *= inv;
  const int id = t.size();
  return t.push(std::move(out), [xs, inv, id](Tape<T>& tp) {
    const TensorT<T>& g = tp.grad(id);
    for (int p : xs) {
      TensorT<T>& dp = tp.grad(p);
      for (int64_t j = 0; j < g.numel(); ++j) dp[j] += inv * g[j];
    }
  });
}

template <typename T>
int op_reshape(Tape<T>& t, int x, std::vector<int64_t> shape) {
  TensorT<T> out = t.val(x).reshaped(std::move(shape));
  const int id = t.size();
  return t.push(std::move(out), [x, id](Tape<T>& tp) {
    const TensorT<T>& g = tp.grad(id);
    TensorT<T>& dx = tp.grad(x);
    for (int64_t i = 0; i < g.numel(); ++i) dx[i] += g[i];
  });
}

template <typename T>
int op_l1(Tape<T>& t, int a, int b) {
  const TensorT<T>& av = t.val(a);
  const TensorT<T>& bv = t.val(b);
  check(av.same_shape(bv), "l1: shape mismatch");
  check(av.numel() > 0, "l1: empty input");
  const int64_t n = av.numel();
  T acc = T(0);
  for (int64_t i = 0; i < n; ++i) acc += std::abs(av[i] - bv[i]);
  TensorT<T> out({1});
  out[0] = acc / static_cast<T>(n);
  const int id = t.size();
  return t.push(std::move(out), [a, b, n, id](Tape<T>& tp) {
    const T g = tp.grad(id)[0] / static_cast<T>(n);
    const TensorT<T>& av2 = tp.val(a);
    const TensorT<T>& bv2 = tp.val(b);
    TensorT<T>& da = tp.grad(a);
    TensorT<T>& db = tp.grad(b);
    for (int64_t i = 0; i < n; ++i) {
      const T d = av2[i] - bv2[i];
      const T s = d > T(0) ? g : (d < T(0) ? -g : T(0));
      da[i] += s;
      db[i] -= s;
    }
  });
}

// ---- explicit instantiations ----

template class Tape<float>;
template class Tape<double>;

#define KBURST_INSTANTIATE_OPS(T)                                             \
  template int op_input<T>(Tape<T>&, TensorT<T>);                             \
  template int op_add<T>(Tape<T>&, int, int);                                 \
  template int op_add_scaled<T>(Tape<T>&, int, int, double);                  \
  template int op_scale<T>(Tape<T>&, int, double);                            \
  template int op_relu<T>(Tape<T>&, int);                                     \
  template int op_sigmoid<T>(Tape<T>&, int);                                  \
  template int op_conv2d<T>(Tape<T>&, int, int, int, int, int);               \
  template int op_linear<T>(Tape<T>&, int, int, int);                         \
  template int op_gap<T>(Tape<T>&, int);                                      \
  template int op_softmax<T>(Tape<T>&, int);                                  \
  template int op_concat_vec<T>(Tape<T>&, const std::vector<int>&);           \
  template int op_concat_ch<T>(Tape<T>&, const std::vector<int>&);            \
  template int op_channel_scale<T>(Tape<T>&, int, int);                       \
  template int op_channel_bias<T>(Tape<T>&, int, int);                        \
  template int op_stretch<T>(Tape<T>&, int, int64_t, int64_t);                \
  template int op_upsample2<T>(Tape<T>&, int);                                \
  template int op_pixel_shuffle<T>(Tape<T>&, int, int);                       \
  template int op_mean<T>(Tape<T>&, const std::vector<int>&);                 \
  template int op_reshape<T>(Tape<T>&, int, std::vector<int64_t>);            \
  template int op_l1<T>(Tape<T>&, int, int);

KBURST_INSTANTIATE_OPS(float)
KBURST_INSTANTIATE_OPS(double)
#undef KBURST_INSTANTIATE_OPS

}  // namespace kburst
