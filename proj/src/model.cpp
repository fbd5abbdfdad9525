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

#include "kburst/model.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "kburst/deform.hpp"
#include "kburst/json_codecs.hpp"
#include "kburst/rng.hpp"
#include "kburst/tns.hpp"

namespace kburst {
namespace {

bool power_of_two(int64_t v) { return v >= 1 && (v & (v - 1)) == 0; }

std::string block_name(const char* prefix, int index) {
  return std::string(prefix) + std::to_string(index);
}

// Per-step graph context: parameter leaves are created once per tape and
// shared across every sample in the batch, so their gradients accumulate.
template <typename T>
struct Ctx {
  Tape<T>& tape;
  ParamStore<T>& store;
  std::map<std::string, int> leaves;

  int param(const std::string& name, const std::vector<int64_t>& shape, Init init) {
    auto hit = leaves.find(name);
    if (hit != leaves.end()) return hit->second;

    auto it = store.values.find(name);
    if (it == store.values.end()) {
      if (store.sealed) {
        throw std::runtime_error("parameter \"" + name +
                                 "\" missing from checkpoint (config mismatch?)");
      }
      TensorT<T> v(shape);
      if (init == Init::kHe) {
        int64_t fan_in = 1;
        for (size_t d = 1; d < shape.size(); ++d) fan_in *= shape[d];
        const double std = std::sqrt(2.0 / static_cast<double>(std::max<int64_t>(fan_in, 1)));
        Rng rng(derive_seed(store.init_seed, {fnv1a64(name.data(), name.size())}));
        for (int64_t i = 0; i < v.numel(); ++i)
          v[i] = static_cast<T>(rng.normal() * std);
      }
      it = store.values.emplace(name, std::move(v)).first;
    } else if (it->second.shape() != shape) {
      throw std::runtime_error("parameter \"" + name + "\" has shape " +
                               shape_string(it->second.shape()) + ", expected " +
                               shape_string(shape));
    }
    const int id = op_input(tape, it->second);
    leaves.emplace(name, id);
    return id;
  }
};

// 2-D conv with parameters fetched by name; pad = k/2 ("same" for stride 1).
template <typename T>
int conv(Ctx<T>& c, int x, const std::string& name, int64_t cin, int64_t cout, int k,
         int stride = 1, Init init = Init::kHe) {
  const int w = c.param(name + ".w", {cout, cin, k, k}, init);
  const int b = c.param(name + ".b", {cout}, Init::kZero);
  return op_conv2d(c.tape, x, w, b, stride, k / 2);
}

template <typename T>
int linear(Ctx<T>& c, int x, const std::string& name, int64_t in, int64_t out,
           Init init = Init::kHe) {
  const int w = c.param(name + ".w", {out, in}, init);
  const int b = c.param(name + ".b", {out}, Init::kZero);
  return op_linear(c.tape, x, w, b);
}

// conv-relu-conv with identity skip.
template <typename T>
int res_block(Ctx<T>& c, int x, const std::string& prefix, int64_t ch) {
  const int a = op_relu(c.tape, conv(c, x, prefix + ".c1", ch, ch, 3));
  const int b = conv(c, a, prefix + ".c2", ch, ch, 3);
  return op_add(c.tape, x, b);
}

template <typename T>
std::pair<int, int> estimator(Ctx<T>& c, const ModelConfig& cfg, int frame) {
  const int64_t ch = cfg.base_channels;
  const int64_t ks = cfg.kernel_size;
  int h = op_relu(c.tape, conv(c, frame, "estimator.stem", 4, ch, 3));
  for (int r = 0; r < 3; ++r) h = res_block(c, h, block_name("estimator.res", r), ch);
  const int pk = conv(c, h, "estimator.proj", ch, ks * ks, 1);
  const int kvec = op_softmax(c.tape, op_gap(c.tape, pk));
  const int k2d = op_reshape(c.tape, kvec, {ks, ks});
  return {k2d, kvec};
}

// Kernel embedding, detached from the graph: the restorer consumes it as a
// constant, so estimator gradients come only from the kernel loss.
template <typename T>
int detached_embedding(Ctx<T>& c, const Model<T>& m, int kvec) {
  const TensorT<T>& kv = c.tape.val(kvec);
  const int t = m.pca.t;
  const int dim = m.pca.dim();
  TensorT<T> e({t});
  for (int r = 0; r < t; ++r) {
    double acc = 0.0;
    const double* row = m.pca.basis.data() + static_cast<size_t>(r) * dim;
    for (int j = 0; j < dim; ++j)
      acc += row[j] * (static_cast<double>(kv[j]) - m.pca.mean[static_cast<size_t>(j)]);
    e[r] = static_cast<T>(acc);
  }
  return op_input(c.tape, std::move(e));
}

template <typename T>
int akab_block(Ctx<T>& c, const ModelConfig& cfg, int x, int e, const std::string& prefix) {
  const int64_t ch = cfg.base_channels;
  const int64_t t = cfg.embed_t;
  const int t1 = op_relu(c.tape, conv(c, x, prefix + ".c1", ch, ch, 3));
  const int f = conv(c, t1, prefix + ".c2", ch, ch, 3);
  const int ex = op_gap(c.tape, f);
  const int h = op_concat_vec(c.tape, {ex, e});
  const int g1 = op_relu(c.tape, linear(c, h, prefix + ".g1", ch + t, ch));
  const int gamma = op_sigmoid(c.tape, linear(c, g1, prefix + ".g2", ch, ch, Init::kZero));
  const int b1 = op_relu(c.tape, linear(c, h, prefix + ".b1", ch + t, ch));
  const int beta = linear(c, b1, prefix + ".b2", ch, ch, Init::kZero);
  const int mod = op_channel_bias(c.tape, op_channel_scale(c.tape, f, gamma), beta);
  return op_add(c.tape, mod, x);
}

template <typename T>
int extractor(Ctx<T>& c, const ModelConfig& cfg, int frame, int e) {
  const int64_t ch = cfg.base_channels;
  int f = op_relu(c.tape, conv(c, frame, "extractor.stem", 4, ch, 3));
  for (int j = 0; j < cfg.n_akab; ++j) {
    if (cfg.use_akab) {
      f = akab_block(c, cfg, f, e, block_name("extractor.akab", j));
    } else {
      f = res_block(c, f, block_name("extractor.res", j), ch);
    }
  }
  return f;
}

// Offset predictor (two 3x3 convs, zero-initialized head) + deformable conv.
// `extra` (coarser-level offsets) may be -1.
template <typename T>
int kad_level(Ctx<T>& c, const ModelConfig& cfg, const std::string& prefix, int f_ref,
              int e_ref, int f_i, int e_i, int extra) {
  const int64_t ch = cfg.base_channels;
  std::vector<int> parts{f_ref};
  if (cfg.use_kad) parts.push_back(e_ref);
  parts.push_back(f_i);
  if (cfg.use_kad) parts.push_back(e_i);
  if (extra >= 0) parts.push_back(extra);
  int64_t cin = 0;
  for (int p : parts) cin += c.tape.val(p).dim(0);
  const int cat = op_concat_ch(c.tape, parts);
  const int o1 = op_relu(c.tape, conv(c, cat, prefix + ".off1", cin, ch, 3));
  const int off = conv(c, o1, prefix + ".off2", ch, 18, 3, 1, Init::kZero);
  const int w = c.param(prefix + ".dcn.w", {ch, ch, 3, 3}, Init::kHe);
  const int b = c.param(prefix + ".dcn.b", {ch}, Init::kZero);
  const int aligned = op_deform_conv(c.tape, f_i, off, w, b);
  return aligned;
}

// Same as kad_level but also returns the offsets for the coarse-to-fine
// cascade.
template <typename T>
std::pair<int, int> kad_level_with_offsets(Ctx<T>& c, const ModelConfig& cfg,
                                           const std::string& prefix, int f_ref, int e_ref,
                                           int f_i, int e_i, int extra) {
  const int64_t ch = cfg.base_channels;
  std::vector<int> parts{f_ref};
  if (cfg.use_kad) parts.push_back(e_ref);
  parts.push_back(f_i);
  if (cfg.use_kad) parts.push_back(e_i);
  if (extra >= 0) parts.push_back(extra);
  int64_t cin = 0;
  for (int p : parts) cin += c.tape.val(p).dim(0);
  const int cat = op_concat_ch(c.tape, parts);
  const int o1 = op_relu(c.tape, conv(c, cat, prefix + ".off1", cin, ch, 3));
  const int off = conv(c, o1, prefix + ".off2", ch, 18, 3, 1, Init::kZero);
  const int w = c.param(prefix + ".dcn.w", {ch, ch, 3, 3}, Init::kHe);
  const int b = c.param(prefix + ".dcn.b", {ch}, Init::kZero);
  return {op_deform_conv(c.tape, f_i, off, w, b), off};
}

struct FramePyramid {
  int f1 = -1, f2 = -1, f3 = -1;  // features at strides 1/2/4
  int e1 = -1, e2 = -1, e3 = -1;  // degradation maps, only when use_kad
};

template <typename T>
FramePyramid build_pyramid(Ctx<T>& c, const ModelConfig& cfg, int f, int e) {
  const int64_t ch = cfg.base_channels;
  const int64_t t = cfg.embed_t;
  FramePyramid p;
  p.f1 = op_relu(c.tape, conv(c, f, "align.feat_l1", ch, ch, 3, 1));
  p.f2 = op_relu(c.tape, conv(c, f, "align.feat_l2", ch, ch, 3, 2));
  p.f3 = op_relu(c.tape, conv(c, f, "align.feat_l3", ch, ch, 3, 4));
  if (cfg.use_kad) {
    const int64_t h = c.tape.val(f).dim(1), w = c.tape.val(f).dim(2);
    const int em = op_stretch(c.tape, e, h, w);
    p.e1 = op_relu(c.tape, conv(c, em, "align.emb_l1", t, t, 3, 1));
    p.e2 = op_relu(c.tape, conv(c, em, "align.emb_l2", t, t, 3, 2));
    p.e3 = op_relu(c.tape, conv(c, em, "align.emb_l3", t, t, 3, 4));
  }
  return p;
}

template <typename T>
std::vector<int> align_frames(Ctx<T>& c, const ModelConfig& cfg,
                              const std::vector<int>& features,
                              const std::vector<int>& embeddings) {
  const int64_t ch = cfg.base_channels;
  const size_t n = features.size();
  std::vector<int> aligned(n, -1);

  if (!cfg.use_pyramid) {
    for (size_t i = 0; i < n; ++i) {
      int e_ref = -1, e_i = -1;
      if (cfg.use_kad) {
        const int64_t h = c.tape.val(features[i]).dim(1);
        const int64_t w = c.tape.val(features[i]).dim(2);
        e_ref = op_stretch(c.tape, embeddings[0], h, w);
        e_i = op_stretch(c.tape, embeddings[i], h, w);
      }
      aligned[i] = kad_level(c, cfg, "align.l1", features[0], e_ref, features[i], e_i, -1);
    }
    return aligned;
  }

  const int64_t h = c.tape.val(features[0]).dim(1);
  const int64_t w = c.tape.val(features[0]).dim(2);
  if (h % 4 != 0 || w % 4 != 0)
    throw std::invalid_argument("pyramid alignment needs feature dims divisible by 4");

  std::vector<FramePyramid> pyr(n);
  for (size_t i = 0; i < n; ++i)
    pyr[i] = build_pyramid(c, cfg, features[i], cfg.use_kad ? embeddings[i] : -1);

  for (size_t i = 0; i < n; ++i) {
    // Coarse to fine; offsets are upsampled, doubled (pixel units) and fed to
    // the next level's predictor.
    auto [a3, off3] = kad_level_with_offsets(c, cfg, "align.l3", pyr[0].f3, pyr[0].e3,
                                             pyr[i].f3, pyr[i].e3, -1);
    const int up3 = op_scale(c.tape, op_upsample2(c.tape, off3), 2.0);
    auto [a2, off2] = kad_level_with_offsets(c, cfg, "align.l2", pyr[0].f2, pyr[0].e2,
                                             pyr[i].f2, pyr[i].e2, up3);
    const int up2 = op_scale(c.tape, op_upsample2(c.tape, off2), 2.0);
    auto [a1, off1] = kad_level_with_offsets(c, cfg, "align.l1", pyr[0].f1, pyr[0].e1,
                                             pyr[i].f1, pyr[i].e1, up2);
    (void)off1;
    const int a2f = op_upsample2(c.tape, a2);
    const int a3f = op_upsample2(c.tape, op_upsample2(c.tape, a3));
    const int cat = op_concat_ch(c.tape, {a1, a2f, a3f});
    aligned[i] = conv(c, cat, "align.fuse", 3 * ch, ch, 1);
  }
  return aligned;
}

template <typename T>
int rcab_block(Ctx<T>& c, const ModelConfig& cfg, int x, const std::string& prefix) {
  const int64_t ch = cfg.base_channels;
  const int64_t red = ch / 4;  // channel-attention bottleneck
  const int r1 = op_relu(c.tape, conv(c, x, prefix + ".c1", ch, ch, 3));
  const int r2 = conv(c, r1, prefix + ".c2", ch, ch, 3);
  const int pooled = op_gap(c.tape, r2);
  const int q = op_relu(c.tape, linear(c, pooled, prefix + ".ca1", ch, red));
  const int gate = op_sigmoid(c.tape, linear(c, q, prefix + ".ca2", red, ch));
  return op_add(c.tape, x, op_channel_scale(c.tape, r2, gate));
}

template <typename T>
int reconstruct(Ctx<T>& c, const ModelConfig& cfg, int fused) {
  const int64_t ch = cfg.base_channels;
  int h = fused;
  for (int j = 0; j < cfg.n_rcab; ++j) {
    if (cfg.use_rcab) {
      h = rcab_block(c, cfg, h, block_name("recon.rcab", j));
    } else {
      h = res_block(c, h, block_name("recon.res", j), ch);
    }
  }
  // Total upsampling from packed resolution is 2*scale: feature pixel-shuffle
  // stages, then one plain shuffle that unpacks the mosaic phase.
  int stages = 0;
  for (int64_t f = 2 * cfg.scale; f > 2; f /= 2) ++stages;
  for (int s = 0; s < stages; ++s) {
    h = conv(c, h, block_name("recon.up", s + 1), ch, 4 * ch, 3);
    h = op_pixel_shuffle(c.tape, h, 2);
  }
  h = op_pixel_shuffle(c.tape, h, 2);
  return conv(c, h, "recon.out", ch / 4, 3, 3);
}

}  // namespace

void ModelConfig::validate() const {
  if (base_channels < 4 || base_channels % 4 != 0)
    throw std::invalid_argument("model: base_channels must be a positive multiple of 4");
  if (n_akab < 1 || n_rcab < 1)
    throw std::invalid_argument("model: block counts must be >= 1");
  if (pyramid_levels != 3)
    throw std::invalid_argument("model: pyramid_levels is fixed at 3");
  if (embed_t < 1) throw std::invalid_argument("model: embed_t must be >= 1");
  if (scale < 1 || !power_of_two(2 * static_cast<int64_t>(scale)))
    throw std::invalid_argument("model: 2*scale must be a power of two");
  if (kernel_size < 3 || kernel_size % 2 == 0)
    throw std::invalid_argument("model: kernel_size must be odd and >= 3");
}

ModelConfig ablation_variant(ModelConfig base, char variant) {
  base.use_akab = base.use_kad = base.use_pyramid = base.use_rcab = false;
  switch (variant) {
    case 'E':
      base.use_pyramid = true;
      [[fallthrough]];
    case 'D':
      base.use_kad = true;
      [[fallthrough]];
    case 'C':
      base.use_rcab = true;
      [[fallthrough]];
    case 'B':
      base.use_akab = true;
      [[fallthrough]];
    case 'A':
      break;
    default:
      throw std::invalid_argument("ablation_variant: expected 'A'..'E'");
  }
  return base;
}

template <typename T>
void ParamStore<T>::zero_grads() {
  for (auto& [name, g] : grads) g.fill(T(0));
}

template <typename T>
int64_t ParamStore<T>::total_parameters() const {
  int64_t n = 0;
  for (const auto& [name, v] : values) n += v.numel();
  return n;
}

template <typename T>
Model<T> make_model(const ModelConfig& cfg, KernelPca pca, uint64_t pca_hash) {
  cfg.validate();
  if (pca.t != cfg.embed_t)
    throw std::invalid_argument("make_model: PCA t does not match embed_t");
  if (pca.size != cfg.kernel_size)
    throw std::invalid_argument("make_model: PCA kernel size does not match config");
  Model<T> m;
  m.cfg = cfg;
  m.pca = std::move(pca);
  m.pca_hash = pca_hash;
  m.store.init_seed = cfg.init_seed;
  return m;
}

template <typename T>
TensorT<T> pack_raw(const RawImage& raw) {
  const int64_t h = raw.height, w = raw.width;
  TensorT<T> out({4, h / 2, w / 2});
  for (int64_t y = 0; y < h / 2; ++y) {
    for (int64_t x = 0; x < w / 2; ++x) {
      out.at3(0, y, x) = static_cast<T>(raw.at(2 * y, 2 * x));          // R
      out.at3(1, y, x) = static_cast<T>(raw.at(2 * y, 2 * x + 1));      // G1
      out.at3(2, y, x) = static_cast<T>(raw.at(2 * y + 1, 2 * x));      // G2
      out.at3(3, y, x) = static_cast<T>(raw.at(2 * y + 1, 2 * x + 1));  // B
    }
  }
  return out;
}

template <typename T>
TensorT<T> image_to_chw(const RgbImage& img) {
  TensorT<T> out({img.channels, img.height, img.width});
  for (int64_t c = 0; c < img.channels; ++c)
    for (int64_t y = 0; y < img.height; ++y)
      for (int64_t x = 0; x < img.width; ++x) out.at3(c, y, x) = static_cast<T>(img.at(y, x, c));
  return out;
}

template <typename T>
RgbImage chw_to_image(const TensorT<T>& t) {
  if (t.rank() != 3) throw std::invalid_argument("chw_to_image: expected (C,H,W)");
  RgbImage img(t.dim(1), t.dim(2), t.dim(0));
  for (int64_t c = 0; c < img.channels; ++c)
    for (int64_t y = 0; y < img.height; ++y)
      for (int64_t x = 0; x < img.width; ++x) img.at(y, x, c) = static_cast<double>(t.at3(c, y, x));
  return img;
}

template <typename T>
BurstForward model_forward(Model<T>& m, Tape<T>& tape,
                           const std::vector<TensorT<T>>& packed_frames) {
  if (packed_frames.empty()) throw std::invalid_argument("model_forward: empty burst");
  for (const auto& f : packed_frames) {
    if (f.rank() != 3 || f.dim(0) != 4)
      throw std::invalid_argument("model_forward: frames must be packed (4,h,w)");
    if (f.dim(1) != packed_frames[0].dim(1) || f.dim(2) != packed_frames[0].dim(2))
      throw std::invalid_argument("model_forward: ragged frame shapes");
  }

  Ctx<T> c{tape, m.store, {}};
  const size_t n = packed_frames.size();

  BurstForward out;
  std::vector<int> frame_ids(n), embeddings(n), features(n);
  for (size_t i = 0; i < n; ++i) frame_ids[i] = op_input(tape, packed_frames[i]);

  for (size_t i = 0; i < n; ++i) {
    auto [k2d, kvec] = estimator(c, m.cfg, frame_ids[i]);
    out.kernels.push_back(k2d);
    embeddings[i] = detached_embedding(c, m, kvec);
  }
  for (size_t i = 0; i < n; ++i)
    features[i] = extractor(c, m.cfg, frame_ids[i], embeddings[i]);

  const std::vector<int> aligned = align_frames(c, m.cfg, features, embeddings);
  const int fused = op_mean(tape, aligned);
  out.sr = reconstruct(c, m.cfg, fused);
  out.param_leaves = std::move(c.leaves);
  return out;
}

template <typename T>
std::pair<RgbImage, std::vector<BlurKernel>> model_infer(
    Model<T>& m, const std::vector<RawImage>& frames) {
  std::vector<TensorT<T>> packed;
  packed.reserve(frames.size());
  for (const RawImage& f : frames) packed.push_back(pack_raw<T>(f));
  Tape<T> tape;
  const BurstForward fw = model_forward(m, tape, packed);
  RgbImage sr = chw_to_image(tape.val(fw.sr));
  sr.clamp01();
  std::vector<BlurKernel> kernels;
  for (int kid : fw.kernels) {
    const TensorT<T>& kv = tape.val(kid);
    BlurKernel k(static_cast<int>(kv.dim(0)));
    for (int64_t i = 0; i < kv.numel(); ++i) k.v[static_cast<size_t>(i)] = kv[i];
    kernels.push_back(std::move(k));
  }
  return {std::move(sr), std::move(kernels)};
}

template <typename T>
void save_checkpoint(const std::string& path, const Model<T>& m, int64_t step,
                     const AdamState<T>* adam) {
  TensorContainer tc;
  for (const auto& [name, v] : m.store.values)
    tc.put("param." + name, v.template cast<float>());
  nlohmann::json meta;
  meta["model"] = nlohmann::json::parse(model_config_to_json(m.cfg).dump());
  meta["step"] = step;
  meta["pca_hash"] = m.pca_hash;
  if (adam) {
    for (const auto& [name, v] : adam->m) tc.put("adam_m." + name, v.template cast<float>());
    for (const auto& [name, v] : adam->v) tc.put("adam_v." + name, v.template cast<float>());
    meta["adam_step"] = adam->step;
  }
  tc.set_meta(meta);
  tc.save(path);
}

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::string& path, KernelPca pca,
                                    uint64_t pca_hash) {
  const TensorContainer tc = TensorContainer::load(path);
  const nlohmann::json meta = tc.meta();
  if (!meta.contains("model") || !meta.contains("pca_hash"))
    throw std::runtime_error("checkpoint " + path + ": missing metadata");
  const uint64_t stored_hash = meta.at("pca_hash").get<uint64_t>();
  if (stored_hash != pca_hash) {
    throw std::runtime_error(
        "checkpoint " + path +
        " was trained against a different kernel PCA basis (hash mismatch); "
        "re-run with the original pca_basis.tns");
  }
  const ModelConfig cfg = model_config_from_json(Json::parse(meta.at("model").dump()));

  LoadedCheckpoint<T> out{make_model<T>(cfg, std::move(pca), pca_hash), 0, {}, false};
  out.step = meta.value("step", int64_t{0});
  for (const std::string& name : tc.names()) {
    if (name.rfind("param.", 0) == 0) {
      out.model.store.values[name.substr(6)] = tc.get(name).cast<T>();
    } else if (name.rfind("adam_m.", 0) == 0) {
      out.adam.m[name.substr(7)] = tc.get(name).cast<T>();
      out.has_adam = true;
    } else if (name.rfind("adam_v.", 0) == 0) {
      out.adam.v[name.substr(7)] = tc.get(name).cast<T>();
      out.has_adam = true;
    }
  }
  if (out.has_adam) out.adam.step = meta.value("adam_step", int64_t{0});
  out.model.store.sealed = true;
  return out;
}

// ---- explicit instantiations ----
template struct ParamStore<float>;
template struct ParamStore<double>;

#define KBURST_INSTANTIATE_MODEL(T)                                                    \
  template Model<T> make_model<T>(const ModelConfig&, KernelPca, uint64_t);            \
  template TensorT<T> pack_raw<T>(const RawImage&);                                    \
  template TensorT<T> image_to_chw<T>(const RgbImage&);                                \
  template RgbImage chw_to_image<T>(const TensorT<T>&);                                \
  template BurstForward model_forward<T>(Model<T>&, Tape<T>&,                          \
                                         const std::vector<TensorT<T>>&);              \
  template std::pair<RgbImage, std::vector<BlurKernel>> model_infer<T>(                \
      Model<T>&, const std::vector<RawImage>&);                                        \
  template void save_checkpoint<T>(const std::string&, const Model<T>&, int64_t,       \
                                   const AdamState<T>*);                               \
  template LoadedCheckpoint<T> load_checkpoint<T>(const std::string&, KernelPca,       \
                                                  uint64_t);

KBURST_INSTANTIATE_MODEL(float)
KBURST_INSTANTIATE_MODEL(double)
#undef KBURST_INSTANTIATE_MODEL

}  // namespace kburst
