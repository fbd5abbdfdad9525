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

#include "kburst/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "kburst/dataset.hpp"
#include "kburst/rng.hpp"

namespace fs = std::filesystem;

namespace kburst {
namespace {

int64_t draw_index(Rng& rng, int64_t n) {
  const auto i = static_cast<int64_t>(rng.uniform() * static_cast<double>(n));
  return std::min(i, n - 1);
}

// Raw-space crop with even offsets so the mosaic phase is preserved.
RawImage crop_raw(const RawImage& f, int64_t oy, int64_t ox, int64_t size) {
  RawImage out(size, size);
  for (int64_t y = 0; y < size; ++y)
    for (int64_t x = 0; x < size; ++x) out.at(y, x) = f.at(oy + y, ox + x);
  return out;
}

RgbImage crop_rgb(const RgbImage& img, int64_t oy, int64_t ox, int64_t h, int64_t w) {
  RgbImage out(h, w, img.channels);
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x)
      for (int64_t c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(oy + y, ox + x, c);
  return out;
}

TensorT<float> kernel_tensor(const BlurKernel& k) {
  TensorT<float> t({k.size, k.size});
  for (int64_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<float>(k.v[static_cast<size_t>(i)]);
  return t;
}

std::vector<BurstSample> load_samples(const std::string& data_dir, const Manifest& man) {
  std::vector<BurstSample> out;
  out.reserve(man.samples.size());
  for (const auto& e : man.samples)
    out.push_back(read_burst_sample(data_dir + "/" + e.id));
  return out;
}

double validation_psnr(Model<float>& model, const std::vector<BurstSample>& val,
                       int n_frames) {
  double acc = 0.0;
  for (const BurstSample& s : val) {
    std::vector<RawImage> frames(s.frames.begin(), s.frames.begin() + n_frames);
    auto [sr, kernels] = model_infer(model, frames);
    acc += psnr(sr, s.hr);
  }
  return acc / static_cast<double>(val.size());
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("train: lr must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw std::invalid_argument("train: betas must lie in [0,1)");
  if (!(eps > 0.0)) throw std::invalid_argument("train: eps must be positive");
  if (halve_every < 1) throw std::invalid_argument("train: halve_every must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (n_frames < 1) throw std::invalid_argument("train: n_frames must be >= 1");
  if (kernel_loss_weight < 0.0)
    throw std::invalid_argument("train: kernel_loss_weight must be >= 0");
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (max_steps < 0) throw std::invalid_argument("train: max_steps must be >= 0");
  if (crop < 0 || crop % 2 != 0)
    throw std::invalid_argument("train: crop must be even (raw mosaic) and >= 0");
  if (val_fraction < 0.0 || val_fraction >= 1.0)
    throw std::invalid_argument("train: val_fraction must lie in [0,1)");
  if (checkpoint_every < 0) throw std::invalid_argument("train: checkpoint_every must be >= 0");
}

double lr_at_epoch(const TrainConfig& cfg, int64_t epoch) {
  return cfg.lr * std::ldexp(1.0, -static_cast<int>(epoch / cfg.halve_every));
}

bool is_estimator_param(const std::string& name) {
  return name.rfind("estimator.", 0) == 0;
}

double sr_loss(const RgbImage& a, const RgbImage& b) {
  if (a.height != b.height || a.width != b.width || a.channels != b.channels)
    throw std::invalid_argument("sr_loss: image shapes differ");
  double acc = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i) acc += std::abs(a.v[i] - b.v[i]);
  return acc / static_cast<double>(a.v.size());
}

double kernel_loss(const std::vector<BlurKernel>& estimated,
                   const std::vector<BlurKernel>& truth) {
  if (estimated.size() != truth.size() || estimated.empty())
    throw std::invalid_argument("kernel_loss: frame counts differ");
  double acc = 0.0;
  for (size_t i = 0; i < estimated.size(); ++i) {
    const auto& e = estimated[i];
    const auto& t = truth[i];
    if (e.size != t.size) throw std::invalid_argument("kernel_loss: kernel sizes differ");
    double m = 0.0;
    for (size_t j = 0; j < e.v.size(); ++j) m += std::abs(e.v[j] - t.v[j]);
    acc += m / static_cast<double>(e.v.size());
  }
  return acc / static_cast<double>(estimated.size());
}

template <typename T>
void adam_step(ParamStore<T>& store, AdamState<T>& adam, double lr, const TrainConfig& cfg) {
  adam.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam.step));
  for (auto& [name, g] : store.grads) {
    if (cfg.freeze_estimator && is_estimator_param(name)) continue;
    auto vit = store.values.find(name);
    if (vit == store.values.end()) continue;
    TensorT<T>& p = vit->second;
    auto& m = adam.m.try_emplace(name, TensorT<T>(p.shape())).first->second;
    auto& v = adam.v.try_emplace(name, TensorT<T>(p.shape())).first->second;
    for (int64_t i = 0; i < p.numel(); ++i) {
      const double gi = static_cast<double>(g[i]);
      const double mi = cfg.beta1 * static_cast<double>(m[i]) + (1.0 - cfg.beta1) * gi;
      const double vi = cfg.beta2 * static_cast<double>(v[i]) + (1.0 - cfg.beta2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double mh = mi / bc1;
      const double vh = vi / bc2;
      p[i] = static_cast<T>(static_cast<double>(p[i]) - lr * mh / (std::sqrt(vh) + cfg.eps));
    }
  }
}

TrainResult train_model(Model<float>& model, const std::string& data_dir,
                        const TrainConfig& cfg, const std::string& out_dir,
                        int64_t start_step, AdamState<float>* adam_in) {
  cfg.validate();
  fs::create_directories(out_dir);

  const Manifest man = read_manifest(data_dir);
  const int64_t n = static_cast<int64_t>(man.samples.size());
  if (n < 1) throw std::runtime_error("train: dataset is empty");
  const std::vector<BurstSample> samples = load_samples(data_dir, man);

  int64_t val_count = 0;
  if (cfg.val_fraction > 0.0 && n >= 2)
    val_count = std::max<int64_t>(1, std::llround(cfg.val_fraction * static_cast<double>(n)));
  const int64_t train_count = n - val_count;
  if (train_count < 1) throw std::runtime_error("train: no training samples after val split");
  const std::vector<BurstSample> val(samples.end() - val_count, samples.end());

  for (const BurstSample& s : samples) {
    if (static_cast<int>(s.frames.size()) < cfg.n_frames)
      throw std::runtime_error("train: sample has fewer frames than n_frames");
    if (cfg.crop > 0 && (s.frames[0].height < cfg.crop || s.frames[0].width < cfg.crop))
      throw std::runtime_error("train: frames smaller than the crop size");
  }
  const int64_t scale = samples[0].hr.height / samples[0].frames[0].height;

  const int64_t batch = std::min<int64_t>(cfg.batch_size, train_count);
  const int64_t steps_per_epoch = std::max<int64_t>(1, train_count / batch);
  const int64_t total_steps =
      cfg.max_steps > 0 ? cfg.max_steps
                        : static_cast<int64_t>(cfg.epochs) * steps_per_epoch;
  if (start_step >= total_steps)
    throw std::runtime_error("train: start step is at or past the configured end");

  TrainResult res;
  res.log_path = out_dir + "/train_log.csv";
  std::ofstream log(res.log_path, start_step == 0 ? std::ios::trunc : std::ios::app);
  if (!log) throw std::runtime_error("train: cannot open " + res.log_path);
  if (start_step == 0) log << "step,epoch,lr,sr_loss,kernel_loss,val_psnr\n";

  AdamState<float> adam;
  if (adam_in) adam = *adam_in;

  std::vector<int64_t> perm(static_cast<size_t>(train_count));
  int64_t perm_epoch = -1;

  for (int64_t step = start_step; step < total_steps; ++step) {
    const int64_t epoch = step / steps_per_epoch;
    const int64_t step_in_epoch = step % steps_per_epoch;
    const double lr = lr_at_epoch(cfg, epoch);

    if (epoch != perm_epoch) {
      for (int64_t i = 0; i < train_count; ++i) perm[static_cast<size_t>(i)] = i;
      Rng shuffle_rng(derive_seed(cfg.seed, {static_cast<uint64_t>(epoch), 0x5u}));
      for (int64_t i = train_count - 1; i > 0; --i)
        std::swap(perm[static_cast<size_t>(i)],
                  perm[static_cast<size_t>(draw_index(shuffle_rng, i + 1))]);
      perm_epoch = epoch;
    }

    const uint64_t batch_seed = derive_seed(cfg.seed, {static_cast<uint64_t>(step), 0xBA7Cu});
    Rng brng(batch_seed);

    Tape<float> tape;
    std::vector<BurstForward> fws;
    std::vector<int> losses;
    double sr_acc = 0.0, k_acc = 0.0;

    for (int64_t slot = 0; slot < batch; ++slot) {
      const int64_t idx = perm[static_cast<size_t>((step_in_epoch * batch + slot) % train_count)];
      const BurstSample& s = samples[static_cast<size_t>(idx)];

      int64_t oy = 0, ox = 0;
      int64_t ch = s.frames[0].height, cw = s.frames[0].width;
      if (cfg.crop > 0 && (cfg.crop < ch || cfg.crop < cw)) {
        oy = 2 * draw_index(brng, (ch - cfg.crop) / 2 + 1);
        ox = 2 * draw_index(brng, (cw - cfg.crop) / 2 + 1);
        ch = cw = cfg.crop;
      }

      std::vector<TensorT<float>> packed;
      packed.reserve(static_cast<size_t>(cfg.n_frames));
      for (int i = 0; i < cfg.n_frames; ++i)
        packed.push_back(pack_raw<float>(crop_raw(s.frames[static_cast<size_t>(i)], oy, ox, ch)));

      BurstForward fw = model_forward(model, tape, packed);

      const RgbImage gt = crop_rgb(s.hr, scale * oy, scale * ox, scale * ch, scale * cw);
      const int gt_id = op_input(tape, image_to_chw<float>(gt));
      const int sl = op_l1(tape, fw.sr, gt_id);

      std::vector<int> k_terms;
      for (int i = 0; i < cfg.n_frames; ++i) {
        const int kt = op_input(tape, kernel_tensor(s.kernels[static_cast<size_t>(i)]));
        k_terms.push_back(op_l1(tape, fw.kernels[static_cast<size_t>(i)], kt));
      }
      const int kl = op_mean(tape, k_terms);

      losses.push_back(op_add_scaled(tape, sl, kl, cfg.kernel_loss_weight));
      sr_acc += static_cast<double>(tape.val(sl)[0]);
      k_acc += static_cast<double>(tape.val(kl)[0]);
      fws.push_back(std::move(fw));
    }

    const int batch_loss = op_mean(tape, losses);
    const double loss_value = static_cast<double>(tape.val(batch_loss)[0]);
    if (!std::isfinite(loss_value)) {
      char msg[160];
      std::snprintf(msg, sizeof(msg),
                    "train: non-finite loss at step %lld (batch seed 0x%016llx)",
                    static_cast<long long>(step), static_cast<unsigned long long>(batch_seed));
      throw std::runtime_error(msg);
    }
    if (step == start_step) res.initial_loss = loss_value;
    res.final_loss = loss_value;

    model.store.zero_grads();
    tape.backward(batch_loss);
    for (const BurstForward& fw : fws) {
      for (const auto& [name, leaf] : fw.param_leaves) {
        const TensorT<float>& g = tape.grad(leaf);
        auto it = model.store.grads.find(name);
        if (it == model.store.grads.end())
          it = model.store.grads.emplace(name, TensorT<float>(g.shape())).first;
        TensorT<float>& acc = it->second;
        for (int64_t i = 0; i < g.numel(); ++i) acc[i] += g[i];
      }
    }
    adam_step(model.store, adam, lr, cfg);

    const bool last_of_epoch = step_in_epoch == steps_per_epoch - 1;
    const bool last = step == total_steps - 1;
    std::string val_field;
    if (val_count > 0 && (last_of_epoch || last)) {
      const double vp = validation_psnr(model, val, cfg.n_frames);
      res.final_val_psnr = vp;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4f", vp);
      val_field = buf;
    }
    char row[192];
    std::snprintf(row, sizeof(row), "%lld,%lld,%.8g,%.6f,%.6f,",
                  static_cast<long long>(step), static_cast<long long>(epoch), lr,
                  sr_acc / static_cast<double>(batch), k_acc / static_cast<double>(batch));
    log << row << val_field << "\n";
    log.flush();

    if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0 && !last) {
      save_checkpoint(out_dir + "/checkpoint_" + std::to_string(step + 1) + ".tns", model,
                      step + 1, &adam);
    }
  }

  res.steps = total_steps;
  res.checkpoint_path = out_dir + "/checkpoint_final.tns";
  save_checkpoint(res.checkpoint_path, model, total_steps, &adam);
  if (adam_in) *adam_in = adam;
  return res;
}

MetricReport evaluate_model(Model<float>& model, const std::string& data_dir, int n_frames) {
  const Manifest man = read_manifest(data_dir);
  MetricReport report;
  for (const auto& entry : man.samples) {
    BurstSample s = read_burst_sample(data_dir + "/" + entry.id);
    const int take = n_frames > 0 ? n_frames : static_cast<int>(s.frames.size());
    if (take > static_cast<int>(s.frames.size()))
      throw std::runtime_error("eval: sample " + entry.id + " has fewer frames than requested");
    std::vector<RawImage> frames(s.frames.begin(), s.frames.begin() + take);
    auto [sr, kernels] = model_infer(model, frames);
    report.samples.push_back({entry.id, psnr(sr, s.hr), ssim(sr, s.hr)});
  }
  return report;
}

template void adam_step<float>(ParamStore<float>&, AdamState<float>&, double,
                               const TrainConfig&);
template void adam_step<double>(ParamStore<double>&, AdamState<double>&, double,
                                const TrainConfig&);

}  // namespace kburst
