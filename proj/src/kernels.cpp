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

#include "kburst/kernels.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "kburst/tns.hpp"

namespace kburst {

double BlurKernel::sum() const {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

KernelParams sample_kernel_params(double width_lo, double width_hi, Rng& rng) {
  if (!(width_lo > 0.0) || !(width_lo <= width_hi))
    throw std::invalid_argument("sample_kernel_params: need 0 < width_lo <= width_hi");
  KernelParams p;
  p.sigma1 = rng.uniform(width_lo, width_hi);
  p.sigma2 = rng.uniform(width_lo, width_hi);
  p.theta = rng.uniform(-M_PI, M_PI);
  return p;
}

BlurKernel delta_kernel(int size) {
  if (size < 1 || size % 2 == 0) throw std::invalid_argument("delta_kernel: size must be odd");
  BlurKernel k(size);
  k.at(size / 2, size / 2) = 1.0;
  return k;
}

BlurKernel make_anisotropic_gaussian(const KernelParams& params, int size) {
  if (size < 3 || size % 2 == 0)
    throw std::invalid_argument("make_anisotropic_gaussian: size must be odd and >= 3");
  if (!(params.sigma1 > 0.0) || !(params.sigma2 > 0.0))
    throw std::invalid_argument("make_anisotropic_gaussian: sigma must be positive");

  // Inverse covariance of R diag(s1^2, s2^2) R^T, in (dy, dx) coordinates.
  const double ct = std::cos(params.theta), st = std::sin(params.theta);
  const double i1 = 1.0 / (params.sigma1 * params.sigma1);
  const double i2 = 1.0 / (params.sigma2 * params.sigma2);
  const double a = ct * ct * i1 + st * st * i2;
  const double b = st * ct * (i1 - i2);
  const double c = st * st * i1 + ct * ct * i2;

  BlurKernel k(size);
  const int half = (size - 1) / 2;
  double sum = 0.0;
  for (int y = 0; y < size; ++y) {
    const double dy = y - half;
    for (int x = 0; x < size; ++x) {
      const double dx = x - half;
      const double q = a * dy * dy + 2.0 * b * dy * dx + c * dx * dx;
      const double val = std::exp(-0.5 * q);
      k.at(y, x) = val;
      sum += val;
    }
  }
  for (double& val : k.v) val /= sum;
  return k;
}

std::vector<BlurKernel> make_kernel_corpus(int count, double width_lo, double width_hi,
                                           uint64_t seed, int size) {
  Rng rng(seed);
  std::vector<BlurKernel> corpus;
  corpus.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i)
    corpus.push_back(make_anisotropic_gaussian(sample_kernel_params(width_lo, width_hi, rng), size));
  return corpus;
}

KernelPca fit_pca(const std::vector<BlurKernel>& corpus, int t) {
  if (corpus.size() < 1000)
    throw std::invalid_argument("fit_pca: corpus must hold at least 1000 kernels");
  const int size = corpus.front().size;
  const int dim = size * size;
  if (t < 1 || t > dim)
    throw std::invalid_argument("fit_pca: t must lie in [1, " + std::to_string(dim) + "]");
  if (t > static_cast<int>(corpus.size()))
    throw std::invalid_argument("fit_pca: t exceeds corpus rank");
  for (const auto& k : corpus)
    if (k.size != size) throw std::invalid_argument("fit_pca: mixed kernel sizes in corpus");

  const int64_t n = static_cast<int64_t>(corpus.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (const auto& k : corpus)
    mean += Eigen::Map<const Eigen::VectorXd>(k.v.data(), dim);
  mean /= static_cast<double>(n);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& k : corpus) {
    Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(k.v.data(), dim) - mean;
    cov.selfadjointView<Eigen::Lower>().rankUpdate(d);
  }
  cov /= static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      cov.selfadjointView<Eigen::Lower>());
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("fit_pca: eigendecomposition failed");

  KernelPca pca;
  pca.size = size;
  pca.t = t;
  pca.mean.assign(mean.data(), mean.data() + dim);
  pca.basis.resize(static_cast<size_t>(t) * dim);
  // Eigen returns eigenvalues ascending; emit rows by descending eigenvalue.
  for (int r = 0; r < t; ++r) {
    Eigen::VectorXd vec = solver.eigenvectors().col(dim - 1 - r);
    const double tau = 1e-9 * vec.cwiseAbs().maxCoeff();
    for (int i = 0; i < dim; ++i) {
      if (std::abs(vec[i]) > tau) {
        if (vec[i] < 0.0) vec = -vec;
        break;
      }
    }
    for (int i = 0; i < dim; ++i) pca.basis[static_cast<size_t>(r) * dim + i] = vec[i];
  }
  return pca;
}

KernelEmbedding project(const KernelPca& pca, const BlurKernel& kernel) {
  if (kernel.size != pca.size)
    throw std::invalid_argument("project: kernel size does not match PCA basis");
  const int dim = pca.dim();
  Eigen::Map<const Eigen::VectorXd> k(kernel.v.data(), dim);
  Eigen::Map<const Eigen::VectorXd> mean(pca.mean.data(), dim);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> basis(
      pca.basis.data(), pca.t, dim);
  Eigen::VectorXd e = basis * (k - mean);
  KernelEmbedding emb;
  emb.values.assign(e.data(), e.data() + pca.t);
  return emb;
}

BlurKernel reconstruct(const KernelPca& pca, const KernelEmbedding& emb) {
  if (static_cast<int>(emb.values.size()) != pca.t)
    throw std::invalid_argument("reconstruct: embedding length does not match t");
  const int dim = pca.dim();
  Eigen::Map<const Eigen::VectorXd> e(emb.values.data(), pca.t);
  Eigen::Map<const Eigen::VectorXd> mean(pca.mean.data(), dim);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> basis(
      pca.basis.data(), pca.t, dim);
  Eigen::VectorXd k = mean + basis.transpose() * e;
  BlurKernel out(pca.size);
  for (int i = 0; i < dim; ++i) out.v[static_cast<size_t>(i)] = k[i];
  return out;
}

void save_pca(const std::string& path, const KernelPca& pca, uint64_t corpus_seed,
              int64_t corpus_size) {
  TensorContainer c;
  Tensor mean({pca.dim()});
  for (int i = 0; i < pca.dim(); ++i) mean[i] = static_cast<float>(pca.mean[static_cast<size_t>(i)]);
  Tensor basis({pca.t, pca.dim()});
  for (int64_t i = 0; i < basis.numel(); ++i)
    basis[i] = static_cast<float>(pca.basis[static_cast<size_t>(i)]);
  c.put("mean", std::move(mean));
  c.put("basis", std::move(basis));
  nlohmann::json meta;
  meta["t"] = pca.t;
  meta["kernel_size"] = pca.size;
  meta["corpus_seed"] = corpus_seed;
  meta["corpus_size"] = corpus_size;
  c.set_meta(meta);
  c.save(path);
}

KernelPca load_pca(const std::string& path) {
  TensorContainer c = TensorContainer::load(path);
  const Tensor& mean = c.get("mean");
  const Tensor& basis = c.get("basis");
  if (basis.rank() != 2 || mean.rank() != 1 || basis.dim(1) != mean.dim(0))
    throw std::runtime_error("load_pca: malformed basis file " + path);
  KernelPca pca;
  pca.t = static_cast<int>(basis.dim(0));
  pca.size = static_cast<int>(std::lround(std::sqrt(static_cast<double>(mean.dim(0)))));
  if (static_cast<int64_t>(pca.size) * pca.size != mean.dim(0))
    throw std::runtime_error("load_pca: mean length is not a square " + path);
  pca.mean.resize(static_cast<size_t>(mean.numel()));
  for (int64_t i = 0; i < mean.numel(); ++i) pca.mean[static_cast<size_t>(i)] = mean[i];
  pca.basis.resize(static_cast<size_t>(basis.numel()));
  for (int64_t i = 0; i < basis.numel(); ++i) pca.basis[static_cast<size_t>(i)] = basis[i];
  return pca;
}

uint64_t pca_file_hash(const std::string& path) {
  return TensorContainer::load(path).content_hash();
}

}  // namespace kburst
