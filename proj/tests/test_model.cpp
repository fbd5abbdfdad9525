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

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <doctest.h>

#include "kburst/model.hpp"
#include "kburst/rng.hpp"
#include "test_util.hpp"

using namespace kburst;
using test::TempDir;

namespace {

KernelPca fixture_pca(int t, int size) {
  // Memoized: the fit is deterministic and several cases share it.
  static std::map<std::pair<int, int>, KernelPca> cache;
  auto it = cache.find({t, size});
  if (it == cache.end()) {
    const auto corpus = make_kernel_corpus(1000, 0.6, 3.0, 2024, size);
    it = cache.emplace(std::make_pair(t, size), fit_pca(corpus, t)).first;
  }
  return it->second;
}

ModelConfig tiny_cfg(int channels = 8, int t = 4, int scale = 2, int ks = 15) {
  ModelConfig cfg;
  cfg.base_channels = channels;
  cfg.n_akab = 1;
  cfg.n_rcab = 1;
  cfg.embed_t = t;
  cfg.scale = scale;
  cfg.kernel_size = ks;
  cfg.init_seed = 77;
  return cfg;
}

template <typename T>
std::vector<TensorT<T>> random_burst(int n, int64_t h, int64_t w, uint64_t seed) {
  std::vector<TensorT<T>> frames;
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    TensorT<T> f({4, h, w});
    for (int64_t j = 0; j < f.numel(); ++j) f[j] = static_cast<T>(rng.uniform(0.0, 1.0));
    frames.push_back(std::move(f));
  }
  return frames;
}

template <typename T>
bool has_param_prefix(const ParamStore<T>& store, const std::string& prefix) {
  for (const auto& [name, v] : store.values)
    if (name.rfind(prefix, 0) == 0 || name.find(prefix) != std::string::npos) return true;
  return false;
}

template <typename T>
int burst_loss(Tape<T>& t, const BurstForward& fw, int sr_target, int k_target) {
  const int sl = op_l1(t, fw.sr, sr_target);
  std::vector<int> kls;
  for (int k : fw.kernels) kls.push_back(op_l1(t, k, k_target));
  return op_add_scaled(t, sl, op_mean(t, kls), 1.0);
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("configuration validation") {
  ModelConfig cfg = tiny_cfg();
  CHECK_NOTHROW(cfg.validate());
  cfg.scale = 3;  // 2*scale must be a power of two
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = tiny_cfg();
  cfg.base_channels = 6;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = tiny_cfg();
  cfg.kernel_size = 14;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("ablation ladder accumulates the toggles") {
  const ModelConfig base = tiny_cfg();
  const ModelConfig a = ablation_variant(base, 'A');
  CHECK_FALSE(a.use_akab);
  CHECK_FALSE(a.use_rcab);
  CHECK_FALSE(a.use_kad);
  CHECK_FALSE(a.use_pyramid);
  const ModelConfig b = ablation_variant(base, 'B');
  CHECK(b.use_akab);
  CHECK_FALSE(b.use_rcab);
  const ModelConfig c = ablation_variant(base, 'C');
  CHECK(c.use_akab);
  CHECK(c.use_rcab);
  CHECK_FALSE(c.use_kad);
  const ModelConfig d = ablation_variant(base, 'D');
  CHECK(d.use_kad);
  CHECK_FALSE(d.use_pyramid);
  const ModelConfig e = ablation_variant(base, 'E');
  CHECK(e.use_akab);
  CHECK(e.use_rcab);
  CHECK(e.use_kad);
  CHECK(e.use_pyramid);
  CHECK_THROWS_AS(ablation_variant(base, 'F'), std::invalid_argument);
}

TEST_CASE("model construction cross-checks the basis") {
  const KernelPca pca = fixture_pca(4, 15);
  CHECK_NOTHROW(make_model<float>(tiny_cfg(), pca, 1));
  ModelConfig bad_t = tiny_cfg(8, 5);
  CHECK_THROWS_AS(make_model<float>(bad_t, pca, 1), std::invalid_argument);
  ModelConfig bad_ks = tiny_cfg(8, 4, 2, 17);
  CHECK_THROWS_AS(make_model<float>(bad_ks, pca, 1), std::invalid_argument);
}

TEST_CASE("raw packing separates the bayer planes") {
  RawImage raw(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) raw.at(y, x) = 10.0 * y + x;
  const TensorT<float> p = pack_raw<float>(raw);
  REQUIRE(p.shape() == std::vector<int64_t>{4, 2, 2});
  for (int64_t y = 0; y < 2; ++y)
    for (int64_t x = 0; x < 2; ++x) {
      CHECK(p.at3(0, y, x) == static_cast<float>(raw.at(2 * y, 2 * x)));      // R
      CHECK(p.at3(1, y, x) == static_cast<float>(raw.at(2 * y, 2 * x + 1)));  // G1
      CHECK(p.at3(2, y, x) == static_cast<float>(raw.at(2 * y + 1, 2 * x)));  // G2
      CHECK(p.at3(3, y, x) == static_cast<float>(raw.at(2 * y + 1, 2 * x + 1)));  // B
    }
}

TEST_CASE("image and tensor layouts round trip") {
  const RgbImage img = test::random_image(6, 5, 77);
  const TensorT<double> t = image_to_chw<double>(img);
  REQUIRE(t.shape() == std::vector<int64_t>{3, 6, 5});
  CHECK(t.at3(2, 4, 3) == img.at(4, 3, 2));
  const RgbImage back = chw_to_image(t);
  for (size_t i = 0; i < img.v.size(); ++i)
    CHECK(back.v[i] == doctest::Approx(img.v[i]).epsilon(1e-12));
}

TEST_CASE("forward output shapes across burst sizes") {
  const KernelPca pca = fixture_pca(4, 15);
  Model<float> m = make_model<float>(tiny_cfg(), pca, 3);
  for (const int n : {1, 2, 3}) {
    Tape<float> tape;
    const auto frames = random_burst<float>(n, 8, 8, 500 + static_cast<uint64_t>(n));
    const BurstForward fw = model_forward(m, tape, frames);
    CHECK(tape.val(fw.sr).shape() == std::vector<int64_t>{3, 32, 32});
    REQUIRE(static_cast<int>(fw.kernels.size()) == n);
    for (const int k : fw.kernels)
      CHECK(tape.val(k).shape() == std::vector<int64_t>{15, 15});
    CHECK_FALSE(fw.param_leaves.empty());
  }
  CHECK(m.store.total_parameters() > 0);
}

TEST_CASE("estimated kernels live on the probability simplex") {
  const KernelPca pca = fixture_pca(4, 15);
  Model<double> m = make_model<double>(tiny_cfg(), pca, 3);
  Tape<double> tape;
  const auto fw = model_forward(m, tape, random_burst<double>(2, 8, 8, 9));
  for (const int k : fw.kernels) {
    double sum = 0.0;
    for (int64_t i = 0; i < tape.val(k).numel(); ++i) {
      CHECK(tape.val(k)[i] >= 0.0);
      sum += tape.val(k)[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("two models with the same init seed agree bit for bit") {
  const KernelPca pca = fixture_pca(4, 15);
  Model<float> m1 = make_model<float>(tiny_cfg(), pca, 3);
  Model<float> m2 = make_model<float>(tiny_cfg(), pca, 3);
  const auto frames = random_burst<float>(2, 8, 8, 11);
  Tape<float> t1, t2;
  const auto f1 = model_forward(m1, t1, frames);
  const auto f2 = model_forward(m2, t2, frames);
  CHECK(t1.val(f1.sr).storage() == t2.val(f2.sr).storage());

  ModelConfig other = tiny_cfg();
  other.init_seed = 78;
  Model<float> m3 = make_model<float>(other, pca, 3);
  Tape<float> t3;
  const auto f3 = model_forward(m3, t3, frames);
  CHECK(t1.val(f1.sr).storage() != t3.val(f3.sr).storage());
}

TEST_CASE("fusion is symmetric in the non-reference frames") {
  const KernelPca pca = fixture_pca(4, 15);
  Model<double> m = make_model<double>(tiny_cfg(), pca, 3);
  auto frames = random_burst<double>(3, 8, 8, 21);

  Tape<double> t1;
  const auto f1 = model_forward(m, t1, frames);
  std::swap(frames[1], frames[2]);
  Tape<double> t2;
  const auto f2 = model_forward(m, t2, frames);

  double worst = 0.0;
  for (int64_t i = 0; i < t1.val(f1.sr).numel(); ++i)
    worst = std::max(worst, std::abs(t1.val(f1.sr)[i] - t2.val(f2.sr)[i]));
  CHECK(worst < 1e-9);
}

TEST_CASE("ablation variants allocate distinct parameter families") {
  const KernelPca pca = fixture_pca(4, 15);

  Model<float> plain = make_model<float>(ablation_variant(tiny_cfg(), 'A'), pca, 3);
  Tape<float> ta;
  model_forward(plain, ta, random_burst<float>(2, 8, 8, 31));
  CHECK_FALSE(has_param_prefix(plain.store, "akab"));
  CHECK_FALSE(has_param_prefix(plain.store, "emb_l"));
  CHECK_FALSE(has_param_prefix(plain.store, "align.l2"));
  CHECK_FALSE(has_param_prefix(plain.store, "rcab"));
  CHECK(has_param_prefix(plain.store, "extractor.res0"));
  CHECK(has_param_prefix(plain.store, "recon.res0"));
  // Alignment offsets come from the two feature maps only: 2C input channels.
  const auto& off1 = plain.store.values.at("align.l1.off1.w");
  CHECK(off1.dim(1) == 16);

  Model<float> full = make_model<float>(ablation_variant(tiny_cfg(), 'E'), pca, 3);
  Tape<float> te;
  model_forward(full, te, random_burst<float>(2, 8, 8, 31));
  CHECK(has_param_prefix(full.store, "extractor.akab0"));
  CHECK(has_param_prefix(full.store, "recon.rcab0"));
  CHECK(has_param_prefix(full.store, "align.l3.dcn"));
  CHECK(has_param_prefix(full.store, "align.fuse"));
  CHECK(has_param_prefix(full.store, "align.emb_l2"));
  // Kernel-aware offsets see features plus both embeddings: 2C + 2t channels
  // at the coarsest level, plus 18 cascaded offset channels at finer levels.
  const auto& off3e = full.store.values.at("align.l3.off1.w");
  CHECK(off3e.dim(1) == 16 + 8);
  const auto& off1e = full.store.values.at("align.l1.off1.w");
  CHECK(off1e.dim(1) == 16 + 8 + 18);
  // Estimator layout is shared by every variant.
  CHECK(plain.store.values.at("estimator.stem.w").shape() ==
        full.store.values.at("estimator.stem.w").shape());
}

TEST_CASE("reconstruction loss does not reach the estimator") {
  const KernelPca pca = fixture_pca(4, 15);
  Model<double> m = make_model<double>(tiny_cfg(), pca, 3);
  const auto frames = random_burst<double>(2, 8, 8, 41);

  Tape<double> tape;
  const auto fw = model_forward(m, tape, frames);
  Rng rng(5);
  TensorT<double> target({3, 32, 32});
  for (int64_t i = 0; i < target.numel(); ++i) target[i] = rng.uniform(0.0, 1.0);
  const int root = op_l1(tape, fw.sr, op_input(tape, target));
  tape.backward(root);

  double est = 0.0, rest = 0.0;
  for (const auto& [name, leaf] : fw.param_leaves) {
    double g = 0.0;
    for (int64_t i = 0; i < tape.grad(leaf).numel(); ++i)
      g = std::max(g, std::abs(static_cast<double>(tape.grad(leaf)[i])));
    if (name.rfind("estimator.", 0) == 0)
      est = std::max(est, g);
    else
      rest = std::max(rest, g);
  }
  CHECK(est == 0.0);
  CHECK(rest > 0.0);
}

TEST_CASE("kernel loss trains the estimator and the full loss reaches everything") {
  const KernelPca pca = fixture_pca(4, 15);
  Model<double> m = make_model<double>(tiny_cfg(), pca, 3);
  const auto frames = random_burst<double>(2, 8, 8, 43);

  Tape<double> tape;
  const auto fw = model_forward(m, tape, frames);
  TensorT<double> ksr({15, 15});
  ksr.fill(1.0 / 225.0);
  TensorT<double> tsr({3, 32, 32});
  tsr.fill(0.5);
  const int root =
      burst_loss(tape, fw, op_input(tape, tsr), op_input(tape, ksr));
  tape.backward(root);

  const char* probes[] = {"estimator.stem.w", "extractor.stem.w", "align.l1.dcn.w",
                          "recon.out.w"};
  for (const char* name : probes) {
    const int leaf = fw.param_leaves.at(name);
    double g = 0.0;
    for (int64_t i = 0; i < tape.grad(leaf).numel(); ++i)
      g = std::max(g, std::abs(static_cast<double>(tape.grad(leaf)[i])));
    CHECK(g > 0.0);
  }
}

TEST_CASE("whole-model gradients agree with finite differences") {
  const KernelPca pca = fixture_pca(2, 5);
  ModelConfig cfg = tiny_cfg(4, 2, 1, 5);
  Model<double> m = make_model<double>(cfg, pca, 3);
  const auto frames = random_burst<double>(2, 8, 8, 51);

  Rng rng(6);
  TensorT<double> tsr({3, 16, 16});
  for (int64_t i = 0; i < tsr.numel(); ++i) tsr[i] = rng.uniform(0.0, 1.0);
  TensorT<double> ksr({5, 5});
  for (int64_t i = 0; i < ksr.numel(); ++i) ksr[i] = rng.uniform(0.0, 0.1);

  const auto kernel_term = [&](Tape<double>& t, const BurstForward& fw) {
    std::vector<int> per;
    for (const int k : fw.kernels) per.push_back(op_l1(t, k, op_input(t, ksr)));
    return op_mean(t, per);
  };
  const auto total_of = [&]() {
    Tape<double> t;
    const auto fw = model_forward(m, t, frames);
    return t.val(burst_loss(t, fw, op_input(t, tsr), op_input(t, ksr)))[0];
  };
  // The embedding consumed by the restorer is detached, so finite differences
  // on estimator weights must use the kernel term alone: the total loss also
  // moves through the detached path, which the analytic gradient skips by
  // design.
  const auto kernel_of = [&]() {
    Tape<double> t;
    const auto fw = model_forward(m, t, frames);
    return t.val(kernel_term(t, fw))[0];
  };
  total_of();  // materialize parameters

  // Move the offset heads off their zero init: with exactly-integer sampling
  // positions the bilinear weights sit on a kink, where central differences
  // and one-sided analytic gradients legitimately disagree.
  Rng nudger(7);
  for (auto& [name, ten] : m.store.values) {
    if (name.find(".off2.w") != std::string::npos)
      for (int64_t i = 0; i < ten.numel(); ++i) ten[i] = nudger.uniform(0.001, 0.004);
    if (name.find(".off2.b") != std::string::npos)
      for (int64_t i = 0; i < ten.numel(); ++i) ten[i] = 0.3;
  }

  Tape<double> tape;
  const auto fw = model_forward(m, tape, frames);
  tape.backward(burst_loss(tape, fw, op_input(tape, tsr), op_input(tape, ksr)));
  Tape<double> ktape;
  const auto kfw = model_forward(m, ktape, frames);
  ktape.backward(kernel_term(ktape, kfw));

  // One representative coordinate from every fourth parameter tensor.
  int picked = 0, index = 0;
  double worst = 0.0;
  for (const auto& [name, leaf] : fw.param_leaves) {
    if (index++ % 4 != 0) continue;
    ++picked;
    const bool est = name.rfind("estimator.", 0) == 0;
    const double an = est ? ktape.grad(kfw.param_leaves.at(name))[0] : tape.grad(leaf)[0];
    const double h = 1e-5;
    double& slot = m.store.values.at(name)[0];
    const double keep = slot;
    slot = keep + h;
    const double up = est ? kernel_of() : total_of();
    slot = keep - h;
    const double dn = est ? kernel_of() : total_of();
    slot = keep;
    const double fd = (up - dn) / (2.0 * h);
    worst = std::max(worst,
                     std::abs(fd - an) / std::max(1.0, std::abs(fd) + std::abs(an)));
  }
  CHECK(picked >= 8);
  CHECK(worst < 1e-4);
}

TEST_CASE("pyramid alignment requires divisible feature grids") {
  const KernelPca pca = fixture_pca(4, 15);
  Model<float> m = make_model<float>(tiny_cfg(), pca, 3);
  // 12x12 raw -> 6x6 packed, not divisible by 4.
  Tape<float> tape;
  CHECK_THROWS_AS(model_forward(m, tape, random_burst<float>(2, 6, 6, 61)),
                  std::invalid_argument);
}

TEST_CASE("inference wrapper returns a clamped image and kernels") {
  const KernelPca pca = fixture_pca(4, 15);
  Model<float> m = make_model<float>(tiny_cfg(), pca, 3);
  std::vector<RawImage> frames;
  Rng rng(71);
  for (int i = 0; i < 2; ++i) {
    RawImage f(16, 16);
    for (double& v : f.v) v = rng.uniform(0.0, 1.0);
    frames.push_back(std::move(f));
  }
  const auto [sr, kernels] = model_infer(m, frames);
  CHECK(sr.height == 32);
  CHECK(sr.width == 32);
  for (double v : sr.v) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  REQUIRE(kernels.size() == 2);
  for (const BlurKernel& k : kernels) {
    CHECK(k.size == 15);
    CHECK(k.sum() == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("checkpoints round trip parameters, step and optimizer state") {
  TempDir dir("ckpt");
  const KernelPca pca = fixture_pca(4, 15);
  Model<float> m = make_model<float>(tiny_cfg(), pca, 12345);
  const auto frames = random_burst<float>(2, 8, 8, 81);
  Tape<float> t0;
  const auto f0 = model_forward(m, t0, frames);

  AdamState<float> adam;
  adam.step = 17;
  for (const auto& [name, v] : m.store.values) {
    adam.m[name] = TensorT<float>::full(v.shape(), 0.25f);
    adam.v[name] = TensorT<float>::full(v.shape(), 0.125f);
  }

  const std::string path = dir.sub("checkpoint.tns");
  save_checkpoint(path, m, 42, &adam);

  const LoadedCheckpoint<float> back = load_checkpoint<float>(path, pca, 12345);
  CHECK(back.step == 42);
  CHECK(back.model.cfg.base_channels == 8);
  CHECK(back.model.cfg.scale == 2);
  CHECK(back.model.store.sealed);
  REQUIRE(back.has_adam);
  CHECK(back.adam.step == 17);
  CHECK(back.adam.m.at("recon.out.w")[0] == 0.25f);
  REQUIRE(back.model.store.values.size() == m.store.values.size());
  for (const auto& [name, v] : m.store.values)
    CHECK(back.model.store.values.at(name).storage() == v.storage());

  // The sealed loaded model reproduces the original forward exactly.
  Model<float> lm = back.model;
  Tape<float> t1;
  const auto f1 = model_forward(lm, t1, frames);
  CHECK(t1.val(f1.sr).storage() == t0.val(f0.sr).storage());

  CHECK_THROWS_AS(load_checkpoint<float>(path, pca, 999), std::runtime_error);
}

TEST_CASE("a sealed store refuses to invent parameters") {
  TempDir dir("sealed");
  const KernelPca pca = fixture_pca(4, 15);
  Model<float> m = make_model<float>(ablation_variant(tiny_cfg(), 'A'), pca, 7);
  Tape<float> t0;
  model_forward(m, t0, random_burst<float>(1, 8, 8, 91));
  const std::string path = dir.sub("plain.tns");
  save_checkpoint(path, m, 1, static_cast<const AdamState<float>*>(nullptr));

  LoadedCheckpoint<float> back = load_checkpoint<float>(path, pca, 7);
  CHECK_FALSE(back.has_adam);
  // Force the full variant against the sealed plain-variant weights.
  back.model.cfg = ablation_variant(tiny_cfg(), 'E');
  Tape<float> t1;
  CHECK_THROWS(model_forward(back.model, t1, random_burst<float>(1, 8, 8, 91)));
}

TEST_SUITE_END();
