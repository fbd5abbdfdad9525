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
#include <string>
#include <vector>

#include "kburst/rng.hpp"

namespace kburst {

/// Anisotropic Gaussian parameters: widths along the two principal axes
/// (pixels) and the rotation of the first axis (radians).
struct KernelParams {
  double sigma1 = 1.0;
  double sigma2 = 1.0;
  double theta = 0.0;
};

/// Normalized non-negative blur kernel on a size x size grid (default 31).
struct BlurKernel {
  int size = 31;
  std::vector<double> v;  // row-major, sums to 1

  BlurKernel() = default;
  explicit BlurKernel(int size_)
      : size(size_), v(static_cast<size_t>(size_) * size_, 0.0) {}

  double& at(int y, int x) { return v[static_cast<size_t>(y) * size + x]; }
  double at(int y, int x) const { return v[static_cast<size_t>(y) * size + x]; }
  double sum() const;
};

/// PCA basis over flattened kernels: corpus mean plus t orthonormal rows,
/// ordered by descending eigenvalue.
struct KernelPca {
  int size = 31;                  // kernel side length; dim = size*size
  std::vector<double> mean;       // dim
  std::vector<double> basis;      // t rows x dim, row-major
  int t = 0;

  int dim() const { return size * size; }
};

/// t-dimensional kernel embedding.
struct KernelEmbedding {
  std::vector<double> values;
};

/// Draws sigma1, sigma2 ~ U[width_lo, width_hi] and theta ~ U[-pi, pi].
KernelParams sample_kernel_params(double width_lo, double width_hi, Rng& rng);

/// Identity element of the blur: 1 at the center, 0 elsewhere.
BlurKernel delta_kernel(int size = 31);

/// Builds the normalized anisotropic Gaussian with covariance
/// R(theta) diag(sigma1^2, sigma2^2) R(theta)^T, centered on the grid.
BlurKernel make_anisotropic_gaussian(const KernelParams& params, int size = 31);

/// Convenience corpus sampler for PCA fitting.
std::vector<BlurKernel> make_kernel_corpus(int count, double width_lo, double width_hi,
                                           uint64_t seed, int size = 31);

/// Fits the top-t principal components of the corpus covariance. The sign of
/// each basis row is fixed so its first non-negligible component is positive,
/// which makes refits bit-reproducible.
KernelPca fit_pca(const std::vector<BlurKernel>& corpus, int t);

KernelEmbedding project(const KernelPca& pca, const BlurKernel& kernel);

/// Diagnostic inverse of project: mean + basis^T * emb, not renormalized.
BlurKernel reconstruct(const KernelPca& pca, const KernelEmbedding& emb);

/// PCA basis persistence (pca_basis.tns; see TensorContainer).
void save_pca(const std::string& path, const KernelPca& pca, uint64_t corpus_seed,
              int64_t corpus_size);
KernelPca load_pca(const std::string& path);

/// Hash binding checkpoints to the exact basis they were trained with.
uint64_t pca_file_hash(const std::string& path);

}  // namespace kburst
