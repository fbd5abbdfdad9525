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
#include <filesystem>
#include <limits>
#include <map>
#include <string>

#include <doctest.h>

#include "kburst/dataset.hpp"
#include "kburst/png_io.hpp"
#include "kburst/train.hpp"
#include "test_util.hpp"

using namespace kburst;
using test::TempDir;

namespace {

// A disk dataset small enough to optimize in seconds.
void make_toy_dataset(const std::string& root, int count, uint64_t seed) {
  const std::string hr_dir = root + "/hr";
  std::filesystem::create_directories(hr_dir);
  char name[32];
  for (int i = 0; i < count; ++i) {
    std::snprintf(name, sizeof(name), "/hr_%02d.png", i);
    write_png(hr_dir + name, synthetic_hr_image(32, 32, seed + static_cast<uint64_t>(i)),
              16);
  }
  SynthConfig cfg;
  cfg.n_frames = 2;
  cfg.scale = 2;
  cfg.seed = seed;
  synth_dataset(list_files_sorted(hr_dir), root + "/data", cfg);
}

Model<float> toy_model(int t = 3, uint64_t init_seed = 11) {
  ModelConfig cfg;
  cfg.base_channels = 8;
  cfg.n_akab = 1;
  cfg.n_rcab = 1;
  cfg.embed_t = t;
  cfg.scale = 2;
  cfg.kernel_size = 31;
  cfg.init_seed = init_seed;
  static std::map<int, KernelPca> cache;
  auto it = cache.find(t);
  if (it == cache.end()) {
    const auto corpus = make_kernel_corpus(1000, 0.6, 3.0, 91, 31);
    it = cache.emplace(t, fit_pca(corpus, t)).first;
  }
  return make_model<float>(cfg, it->second, 0x7e57);
}

TrainConfig toy_train(int64_t max_steps) {
  TrainConfig tc;
  tc.lr = 1e-3;
  tc.batch_size = 2;
  tc.n_frames = 2;
  tc.epochs = 1000;  // the step cap decides
  tc.max_steps = max_steps;
  tc.crop = 16;
  tc.val_fraction = 0.25;
  tc.seed = 3;
  return tc;
}

BlurKernel kernel_of(int size, std::initializer_list<double> vals) {
  BlurKernel k(size);
  size_t i = 0;
  for (double v : vals) k.v[i++] = v;
  return k;
}

}  // namespace

TEST_SUITE_BEGIN("train");

TEST_CASE("learning rate halves on the epoch schedule exactly") {
  TrainConfig cfg;
  cfg.lr = 2e-4;
  cfg.halve_every = 100;
  CHECK(lr_at_epoch(cfg, 0) == 2e-4);
  CHECK(lr_at_epoch(cfg, 99) == 2e-4);
  CHECK(lr_at_epoch(cfg, 100) == 1e-4);
  CHECK(lr_at_epoch(cfg, 199) == 1e-4);
  CHECK(lr_at_epoch(cfg, 200) == 5e-5);
  CHECK(lr_at_epoch(cfg, 450) == 2e-4 * 0.0625);
}

TEST_CASE("training configuration validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.crop = 15;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig();
  cfg.val_fraction = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig();
  cfg.lr = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig();
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("estimator parameters are recognized by namespace") {
  CHECK(is_estimator_param("estimator.stem.w"));
  CHECK(is_estimator_param("estimator.res0.c1.b"));
  CHECK_FALSE(is_estimator_param("extractor.stem.w"));
  CHECK_FALSE(is_estimator_param("recon.out.w"));
}

TEST_CASE("image loss is the mean absolute difference") {
  const RgbImage a = test::random_image(6, 6, 1);
  CHECK(sr_loss(a, a) == 0.0);

  RgbImage b = a;
  for (double& v : b.v) v += 0.1;
  CHECK(sr_loss(a, b) == doctest::Approx(0.1).epsilon(1e-12));

  const RgbImage c = test::random_image(6, 6, 2);
  double want = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i) want += std::abs(a.v[i] - c.v[i]);
  want /= static_cast<double>(a.v.size());
  CHECK(sr_loss(a, c) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("kernel loss averages per-frame mean absolute errors") {
  const BlurKernel a0 = kernel_of(3, {0.1, 0.0, 0.0, 0.0, 0.9, 0.0, 0.0, 0.0, 0.0});
  const BlurKernel a1 = kernel_of(3, {0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0});
  CHECK(kernel_loss({a0, a1}, {a0, a1}) == 0.0);
  // Frame 0 differs by 0.1 in two cells (mean 0.2/9), frame 1 matches.
  const double want = 0.5 * (0.2 / 9.0);
  CHECK(kernel_loss({a0, a1}, {a1, a1}) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("optimizer matches a hand-tracked reference") {
  ParamStore<double> store;
  store.values["w"] = TensorT<double>({3}, {0.5, -0.25, 1.0});
  store.grads["w"] = TensorT<double>({3}, {0.1, -0.2, 0.05});
  AdamState<double> adam;
  TrainConfig cfg;

  double m[3] = {0, 0, 0}, v[3] = {0, 0, 0};
  double p[3] = {0.5, -0.25, 1.0};
  const double g1[3] = {0.1, -0.2, 0.05};
  const double g2[3] = {-0.05, 0.1, 0.2};
  const double lr = 1e-3;

  const auto reference = [&](const double* g, int t) {
    for (int i = 0; i < 3; ++i) {
      m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(cfg.beta1, t));
      const double vh = v[i] / (1 - std::pow(cfg.beta2, t));
      p[i] -= lr * mh / (std::sqrt(vh) + cfg.eps);
    }
  };

  adam_step(store, adam, lr, cfg);
  reference(g1, 1);
  for (int i = 0; i < 3; ++i)
    CHECK(store.values["w"][i] == doctest::Approx(p[i]).epsilon(1e-12));

  store.grads["w"] = TensorT<double>({3}, {-0.05, 0.1, 0.2});
  adam_step(store, adam, lr, cfg);
  reference(g2, 2);
  CHECK(adam.step == 2);
  for (int i = 0; i < 3; ++i)
    CHECK(store.values["w"][i] == doctest::Approx(p[i]).epsilon(1e-12));
}

TEST_CASE("frozen estimator parameters keep values and gain no moments") {
  ParamStore<double> store;
  store.values["estimator.stem.w"] = TensorT<double>({2}, {1.0, 2.0});
  store.values["recon.out.w"] = TensorT<double>({2}, {1.0, 2.0});
  store.grads["estimator.stem.w"] = TensorT<double>({2}, {0.3, 0.3});
  store.grads["recon.out.w"] = TensorT<double>({2}, {0.3, 0.3});
  AdamState<double> adam;
  TrainConfig cfg;
  cfg.freeze_estimator = true;

  adam_step(store, adam, 1e-2, cfg);
  CHECK(store.values["estimator.stem.w"][0] == 1.0);
  CHECK(store.values["estimator.stem.w"][1] == 2.0);
  CHECK(store.values["recon.out.w"][0] != 1.0);
  CHECK(adam.m.count("estimator.stem.w") == 0);
  CHECK(adam.m.count("recon.out.w") == 1);
}

TEST_CASE("a short optimization run reduces the loss and logs its trace") {
  TempDir dir("smoke");
  make_toy_dataset(dir.str(), 4, 400);
  Model<float> model = toy_model();
  const TrainConfig tc = toy_train(40);

  const TrainResult res = train_model(model, dir.str() + "/data", tc, dir.sub("run"));
  CHECK(res.steps == 40);
  CHECK(res.final_loss < res.initial_loss);
  CHECK(res.final_val_psnr > 0.0);
  CHECK(std::filesystem::exists(res.checkpoint_path));
  CHECK(std::filesystem::exists(res.log_path));

  const std::string log = test::slurp(res.log_path);
  CHECK(log.rfind("step,epoch,lr,sr_loss,kernel_loss,val_psnr\n", 0) == 0);
  CHECK(std::count(log.begin(), log.end(), '\n') == 41);  // header + one row per step

  // The checkpoint must reload against the same basis and evaluate cleanly.
  const LoadedCheckpoint<float> back =
      load_checkpoint<float>(res.checkpoint_path, model.pca, model.pca_hash);
  Model<float> lm = back.model;
  const MetricReport rep = evaluate_model(lm, dir.str() + "/data");
  CHECK(rep.samples.size() == 4);
  CHECK(std::isfinite(rep.mean_psnr()));
  CHECK(rep.mean_psnr() > 5.0);

  const MetricReport rep1 = evaluate_model(lm, dir.str() + "/data", 1);
  CHECK(rep1.samples.size() == 4);
  CHECK_THROWS_AS(evaluate_model(lm, dir.str() + "/data", 5), std::runtime_error);
}

TEST_CASE("training is reproducible byte for byte") {
  TempDir dir("repro");
  make_toy_dataset(dir.str(), 3, 700);
  const TrainConfig tc = toy_train(6);

  Model<float> m1 = toy_model(3, 55);
  train_model(m1, dir.str() + "/data", tc, dir.sub("r1"));
  Model<float> m2 = toy_model(3, 55);
  train_model(m2, dir.str() + "/data", tc, dir.sub("r2"));

  CHECK(test::slurp(dir.sub("r1") + "/train_log.csv") ==
        test::slurp(dir.sub("r2") + "/train_log.csv"));
  for (const auto& [name, v] : m1.store.values)
    CHECK(v.storage() == m2.store.values.at(name).storage());
}

TEST_CASE("resuming extends the same log and respects the step budget") {
  TempDir dir("resume");
  make_toy_dataset(dir.str(), 3, 900);
  Model<float> model = toy_model();
  const std::string run = dir.sub("run");

  const TrainResult first = train_model(model, dir.str() + "/data", toy_train(5), run);
  CHECK(first.steps == 5);

  LoadedCheckpoint<float> back =
      load_checkpoint<float>(first.checkpoint_path, model.pca, model.pca_hash);
  REQUIRE(back.has_adam);
  Model<float> resumed = back.model;
  const TrainResult second = train_model(resumed, dir.str() + "/data", toy_train(10),
                                         run, back.step, &back.adam);
  CHECK(second.steps == 10);

  const std::string log = test::slurp(run + "/train_log.csv");
  CHECK(std::count(log.begin(), log.end(), '\n') == 11);
  CHECK(log.find("\n5,") != std::string::npos);  // resumed rows continue the count

  Model<float> done = resumed;
  CHECK_THROWS_AS(
      train_model(done, dir.str() + "/data", toy_train(10), dir.sub("over"), 10, nullptr),
      std::runtime_error);
}

TEST_CASE("periodic checkpoints appear at the configured cadence") {
  TempDir dir("periodic");
  make_toy_dataset(dir.str(), 3, 1100);
  Model<float> model = toy_model();
  TrainConfig tc = toy_train(5);
  tc.checkpoint_every = 2;
  train_model(model, dir.str() + "/data", tc, dir.sub("run"));
  CHECK(std::filesystem::exists(dir.sub("run") + "/checkpoint_2.tns"));
  CHECK(std::filesystem::exists(dir.sub("run") + "/checkpoint_4.tns"));
  CHECK(std::filesystem::exists(dir.sub("run") + "/checkpoint_final.tns"));
}

TEST_CASE("non-finite losses abort with the offending batch stream") {
  TempDir dir("nan");
  make_toy_dataset(dir.str(), 3, 1300);
  Model<float> model = toy_model();
  train_model(model, dir.str() + "/data", toy_train(1), dir.sub("warm"));

  // Poison the output head: anything upstream of a relu would be silenced,
  // since relu(NaN) compares false and emits zero.
  model.store.values.at("recon.out.w")[0] =
      std::numeric_limits<float>::quiet_NaN();
  try {
    train_model(model, dir.str() + "/data", toy_train(1), dir.sub("poisoned"));
    FAIL("expected a non-finite loss abort");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("non-finite") != std::string::npos);
    CHECK(msg.find("batch seed 0x") != std::string::npos);
  }
}

TEST_SUITE_END();
