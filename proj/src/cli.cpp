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

#include "kburst/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "kburst/config.hpp"
#include "kburst/dataset.hpp"
#include "kburst/metrics.hpp"
#include "kburst/png_io.hpp"
#include "kburst/tns.hpp"
#include "kburst/train.hpp"
#include "kburst/version.hpp"

namespace fs = std::filesystem;

namespace kburst {
namespace {

bool deterministic_env() {
  const char* v = std::getenv("KBN_DETERMINISTIC");
  return v && std::string(v) == "1";
}

std::string hex64(uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Every output directory records the resolved config and toolkit version;
/// returns a hash of the snapshot for report binding.
std::string write_snapshot(const std::string& out_dir, const ExperimentConfig& cfg,
                           const Json& invocation) {
  fs::create_directories(out_dir);
  Json j;
  j["version"] = kVersionString;
  j["invocation"] = invocation;
  j["config"] = experiment_to_json(cfg);
  const std::string text = j.dump(2) + "\n";
  write_text_file(out_dir + "/config_snapshot.json", text);
  return hex64(fnv1a64(text.data(), text.size()));
}

ExperimentConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return ExperimentConfig{};
  return load_experiment_config(path);
}

std::string resolve(const std::string& flag, const std::string& from_config,
                    const char* what) {
  if (!flag.empty()) return flag;
  if (!from_config.empty()) return from_config;
  throw std::invalid_argument(std::string("missing ") + what +
                              " (pass the flag or set it in the config paths block)");
}

std::pair<double, double> parse_band(const std::string& s) {
  double lo = 0.0, hi = 0.0;
  if (std::sscanf(s.c_str(), "%lf:%lf", &lo, &hi) != 2 || hi < lo)
    throw std::invalid_argument("--band expects lo:hi with hi >= lo, got \"" + s + "\"");
  return {lo, hi};
}

std::vector<std::string> png_files(const std::string& dir) {
  std::vector<std::string> out;
  for (const std::string& f : list_files_sorted(dir))  // already full paths
    if (f.size() > 4 && f.substr(f.size() - 4) == ".png") out.push_back(f);
  return out;
}

RgbImage kernel_mosaic(const std::vector<BlurKernel>& kernels) {
  if (kernels.empty()) throw std::invalid_argument("kernel mosaic: no kernels");
  const int size = kernels[0].size;
  const int n = static_cast<int>(kernels.size());
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  const int rows = (n + cols - 1) / cols;
  RgbImage img(static_cast<int64_t>(rows) * size, static_cast<int64_t>(cols) * size);
  for (int i = 0; i < n; ++i) {
    const BlurKernel& k = kernels[static_cast<size_t>(i)];
    double peak = 0.0;
    for (double v : k.v) peak = std::max(peak, v);
    if (peak <= 0.0) peak = 1.0;
    const int64_t oy = static_cast<int64_t>(i / cols) * size;
    const int64_t ox = static_cast<int64_t>(i % cols) * size;
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const double v = k.at(y, x) / peak;
        for (int c = 0; c < 3; ++c) img.at(oy + y, ox + x, c) = v;
      }
  }
  return img;
}

RgbImage bar_chart(const std::vector<std::pair<std::string, double>>& rows) {
  const int bar_w = 40, gap = 20, plot_h = 200, top = 20, bottom = 20;
  const int n = std::max(1, static_cast<int>(rows.size()));
  RgbImage img(plot_h + top + bottom, gap + n * (bar_w + gap));
  std::fill(img.v.begin(), img.v.end(), 1.0);
  double vmax = 0.0;
  for (const auto& [label, v] : rows) vmax = std::max(vmax, v);
  if (vmax <= 0.0) vmax = 1.0;
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
    const int h = static_cast<int>(std::lround(rows[static_cast<size_t>(i)].second / vmax *
                                               plot_h));
    const int64_t x0 = gap + i * (bar_w + gap);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < bar_w; ++x) {
        const int64_t yy = img.height - bottom - 1 - y;
        img.at(yy, x0 + x, 0) = 0.25;
        img.at(yy, x0 + x, 1) = 0.45;
        img.at(yy, x0 + x, 2) = 0.80;
      }
  }
  for (int64_t x = 0; x < img.width; ++x)
    for (int c = 0; c < 3; ++c) img.at(img.height - bottom, x, c) = 0.0;
  return img;
}

struct Options {
  std::string config, out, hr_dir, data, pca, checkpoint, resume, burst_dir, band, variant;
  int frames = 0;
  int count = 8;
  int height = 128, width = 128;
  uint64_t seed = 1;
  std::vector<std::string> runs;
};

void run_fit_pca(const Options& o) {
  ExperimentConfig cfg = load_config_or_default(o.config);
  const auto corpus =
      make_kernel_corpus(cfg.pca_corpus_size, cfg.synth.width_range.first,
                         cfg.synth.width_range.second, cfg.pca_seed, cfg.model.kernel_size);
  const KernelPca pca = fit_pca(corpus, cfg.model.embed_t);
  write_snapshot(o.out, cfg, Json{{"command", "fit-pca"}});
  const std::string path = o.out + "/pca_basis.tns";
  save_pca(path, pca, cfg.pca_seed, cfg.pca_corpus_size);
  std::cout << "wrote " << path << " (" << pca.t << " components of " << pca.dim()
            << "-d kernels, corpus " << corpus.size() << ")\n";
}

void run_make_hr(const Options& o) {
  if (o.count < 1) throw std::invalid_argument("--count must be >= 1");
  ExperimentConfig cfg = load_config_or_default(o.config);
  write_snapshot(o.out, cfg,
                 Json{{"command", "make-hr"},
                      {"count", o.count},
                      {"height", o.height},
                      {"width", o.width},
                      {"seed", o.seed}});
  for (int i = 0; i < o.count; ++i) {
    const RgbImage hr =
        synthetic_hr_image(o.height, o.width, derive_seed(o.seed, {static_cast<uint64_t>(i)}));
    char name[32];
    std::snprintf(name, sizeof(name), "hr_%04d.png", i);
    write_png(o.out + "/" + name, hr, 16);
  }
  std::cout << "wrote " << o.count << " images to " << o.out << "\n";
}

void run_synth(const Options& o) {
  ExperimentConfig cfg = load_config_or_default(o.config);
  const std::string hr_dir = resolve(o.hr_dir, cfg.paths.hr_dir, "--hr-dir");
  std::optional<std::pair<double, double>> band;
  if (!o.band.empty()) band = parse_band(o.band);
  const std::vector<std::string> hr_paths = png_files(hr_dir);
  if (hr_paths.empty())
    throw std::invalid_argument("no .png files in " + hr_dir);
  write_snapshot(o.out, cfg,
                 Json{{"command", "synth"},
                      {"hr_dir", hr_dir},
                      {"band", o.band.empty() ? Json(nullptr) : Json(o.band)}});
  synth_dataset(hr_paths, o.out, cfg.synth, band);
  std::cout << "synthesized " << hr_paths.size() << " bursts into " << o.out << "\n";
}

void run_train(const Options& o) {
  ExperimentConfig cfg = load_config_or_default(o.config);
  const std::string data = resolve(o.data, cfg.paths.data_dir, "--data");
  const std::string pca_path = resolve(o.pca, cfg.paths.pca, "--pca");
  if (deterministic_env()) cfg.train.deterministic = true;
  if (!o.variant.empty()) {
    if (o.variant.size() != 1)
      throw std::invalid_argument("--variant expects a single letter A..E");
    cfg.model = ablation_variant(cfg.model, o.variant[0]);
  }

  const KernelPca pca = load_pca(pca_path);
  const uint64_t hash = pca_file_hash(pca_path);

  Model<float> model = make_model<float>(cfg.model, pca, hash);
  int64_t start_step = 0;
  AdamState<float> adam;
  if (!o.resume.empty()) {
    LoadedCheckpoint<float> lc = load_checkpoint<float>(o.resume, pca, hash);
    model = std::move(lc.model);
    cfg.model = model.cfg;  // the checkpoint's architecture is authoritative
    start_step = lc.step;
    if (lc.has_adam) adam = std::move(lc.adam);
  }

  write_snapshot(o.out, cfg,
                 Json{{"command", "train"},
                      {"data", data},
                      {"pca", pca_path},
                      {"variant", o.variant},
                      {"resume", o.resume},
                      {"deterministic", cfg.train.deterministic}});
  const TrainResult res = train_model(model, data, cfg.train, o.out, start_step, &adam);
  std::cout << "trained " << res.steps << " steps; loss " << res.initial_loss << " -> "
            << res.final_loss << "; val PSNR " << res.final_val_psnr << " dB\n"
            << "checkpoint: " << res.checkpoint_path << "\n";
}

void run_eval(const Options& o) {
  const KernelPca pca = load_pca(o.pca);
  const uint64_t hash = pca_file_hash(o.pca);
  LoadedCheckpoint<float> lc = load_checkpoint<float>(o.checkpoint, pca, hash);

  ExperimentConfig cfg;
  cfg.model = lc.model.cfg;
  cfg.synth.scale = cfg.model.scale;
  const std::string hash_hex =
      write_snapshot(o.out, cfg,
                     Json{{"command", "eval"},
                          {"checkpoint", o.checkpoint},
                          {"data", o.data},
                          {"frames", o.frames}});

  MetricReport report = evaluate_model(lc.model, o.data, o.frames);
  report.config_hash = hash_hex;
  write_text_file(o.out + "/report.csv", report_csv(report));
  write_text_file(o.out + "/report.json", report_json(report));
  std::cout << "evaluated " << report.samples.size() << " samples: mean PSNR "
            << report.mean_psnr() << " dB, mean SSIM " << report.mean_ssim() << "\n";
}

void run_infer(const Options& o) {
  const KernelPca pca = load_pca(o.pca);
  const uint64_t hash = pca_file_hash(o.pca);
  LoadedCheckpoint<float> lc = load_checkpoint<float>(o.checkpoint, pca, hash);

  const BurstSample sample = read_burst_sample(o.burst_dir);
  ExperimentConfig cfg;
  cfg.model = lc.model.cfg;
  cfg.synth.scale = cfg.model.scale;
  write_snapshot(o.out, cfg,
                 Json{{"command", "infer"},
                      {"checkpoint", o.checkpoint},
                      {"burst_dir", o.burst_dir}});

  auto [sr, kernels] = model_infer(lc.model, sample.frames);
  write_png(o.out + "/sr.png", sr, 8);
  write_png(o.out + "/kernels.png", kernel_mosaic(kernels), 8);
  std::cout << "wrote " << o.out << "/sr.png (" << sr.width << "x" << sr.height << ") and "
            << kernels.size() << "-kernel mosaic\n";
}

void run_report(const Options& o) {
  if (o.runs.empty()) throw std::invalid_argument("--runs expects at least one directory");
  struct Row {
    std::string label;
    double psnr, ssim;
    int64_t n;
  };
  std::vector<Row> rows;
  for (const std::string& run : o.runs) {
    const std::string path = run + "/report.json";
    std::ifstream f(path);
    if (!f) throw std::runtime_error("missing run report: " + path);
    const Json j = Json::parse(f);
    rows.push_back({fs::path(run).filename().string(), j.at("mean_psnr").get<double>(),
                    j.at("mean_ssim").get<double>(), j.at("n_samples").get<int64_t>()});
  }
  std::sort(rows.begin(), rows.end(),
            [](const Row& a, const Row& b) { return a.label < b.label; });

  std::ostringstream table, csv;
  char line[160];
  std::snprintf(line, sizeof(line), "%-24s %12s %10s %8s\n", "run", "mean_psnr", "mean_ssim",
                "samples");
  table << line;
  csv << "run,mean_psnr,mean_ssim,n_samples\n";
  std::vector<std::pair<std::string, double>> bars;
  for (const Row& r : rows) {
    std::snprintf(line, sizeof(line), "%-24s %12.4f %10.4f %8lld\n", r.label.c_str(), r.psnr,
                  r.ssim, static_cast<long long>(r.n));
    table << line;
    std::snprintf(line, sizeof(line), "%s,%.6f,%.6f,%lld\n", r.label.c_str(), r.psnr, r.ssim,
                  static_cast<long long>(r.n));
    csv << line;
    bars.emplace_back(r.label, r.psnr);
  }

  fs::create_directories(o.out);
  write_text_file(o.out + "/report_table.txt", table.str());
  write_text_file(o.out + "/report.csv", csv.str());
  write_png(o.out + "/report_psnr.png", bar_chart(bars), 8);
  std::cout << table.str();
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"burst raw super-resolution toolkit"};
  app.set_version_flag("--version", kVersionString);
  app.require_subcommand(1);
  Options o;

  auto* fit = app.add_subcommand("fit-pca", "fit the blur-kernel PCA basis");
  fit->add_option("--config", o.config, "experiment config JSON");
  fit->add_option("--out", o.out, "output directory (pca_basis.tns)")->required();
  fit->callback([&] { run_fit_pca(o); });

  auto* mkhr = app.add_subcommand("make-hr", "generate synthetic ground-truth images");
  mkhr->add_option("--config", o.config, "experiment config JSON");
  mkhr->add_option("--out", o.out, "output directory")->required();
  mkhr->add_option("--count", o.count, "number of images");
  mkhr->add_option("--height", o.height, "image height");
  mkhr->add_option("--width", o.width, "image width");
  mkhr->add_option("--seed", o.seed, "generator seed");
  mkhr->callback([&] { run_make_hr(o); });

  auto* synth = app.add_subcommand("synth", "synthesize a burst dataset from HR images");
  synth->add_option("--config", o.config, "experiment config JSON");
  synth->add_option("--hr-dir", o.hr_dir, "directory of HR .png images");
  synth->add_option("--out", o.out, "output dataset directory")->required();
  synth->add_option("--band", o.band, "kernel width band lo:hi (eval-set style)");
  synth->callback([&] { run_synth(o); });

  auto* train = app.add_subcommand("train", "train a model on a synthesized dataset");
  train->add_option("--config", o.config, "experiment config JSON");
  train->add_option("--data", o.data, "dataset directory");
  train->add_option("--out", o.out, "run output directory")->required();
  train->add_option("--pca", o.pca, "pca_basis.tns path");
  train->add_option("--resume", o.resume, "checkpoint to resume from");
  train->add_option("--variant", o.variant, "ablation variant A..E");
  train->callback([&] { run_train(o); });

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  ev->add_option("--checkpoint", o.checkpoint, "checkpoint .tns")->required();
  ev->add_option("--pca", o.pca, "pca_basis.tns path")->required();
  ev->add_option("--data", o.data, "dataset directory")->required();
  ev->add_option("--out", o.out, "report output directory")->required();
  ev->add_option("--frames", o.frames, "frames per burst (0 = all stored)");
  ev->callback([&] { run_eval(o); });

  auto* infer = app.add_subcommand("infer", "super-resolve one burst directory");
  infer->add_option("--checkpoint", o.checkpoint, "checkpoint .tns")->required();
  infer->add_option("--pca", o.pca, "pca_basis.tns path")->required();
  infer->add_option("--burst-dir", o.burst_dir, "sample directory (frames.tns inside)")
      ->required();
  infer->add_option("--out", o.out, "output directory")->required();
  infer->callback([&] { run_infer(o); });

  auto* rep = app.add_subcommand("report", "tabulate and plot evaluation runs");
  rep->add_option("--runs", o.runs, "eval output directories")->required()->expected(-1);
  rep->add_option("--out", o.out, "report output directory")->required();
  rep->callback([&] { run_report(o); });

  std::vector<const char*> argv;
  argv.push_back("kburst");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace kburst
