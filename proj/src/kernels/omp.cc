// Copyright 2026 The SND Lab Authors.
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

#include <algorithm>
#include <array>
#include <vector>

#include "snd/kernels.h"
#include "src/kernels/pixel_ops.h"

namespace snd::kernels::omp {
namespace {

// Row range [begin, end) of reduction chunk k.
inline std::pair<int, int> ChunkRows(int height, int k) {
  const int begin = static_cast<int>(static_cast<long>(height) * k /
                                     kReductionChunks);
  const int end = static_cast<int>(static_cast<long>(height) * (k + 1) /
                                   kReductionChunks);
  return {begin, end};
}

}  // namespace

void ExtractFeatures(const ImageTensor& image, FeatureMap& out) {
#pragma omp parallel for schedule(static)
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      internal::PixelFeatures(image, y, x, out.pixel(y * image.width + x));
    }
  }
}

void Forward(const ModelParams& params, const FeatureMap& features,
             ProbMap& out) {
  const int width = features.width;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < features.height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int l = y * width + x;
      internal::PixelForward(params, features.pixel(l), out.pixel(l));
    }
  }
}

LossGradSums AccumulateLossGrad(const ModelParams& params,
                                const FeatureMap& features,
                                const LabelMap& labels,
                                std::span<const double> weights,
                                std::span<const std::uint8_t> mask) {
  std::array<LossGradSums, kReductionChunks> partial;
  const int width = features.width;
#pragma omp parallel for schedule(static)
  for (int k = 0; k < kReductionChunks; ++k) {
    LossGradSums& sums = partial[k];
    sums.grad.assign(params.size(), 0.0);
    std::vector<double> probs(params.classes());
    const auto [begin, end] = ChunkRows(features.height, k);
    for (int l = begin * width; l < end * width; ++l) {
      if (!mask.empty() && mask[l] != 0) continue;
      ++sums.valid;
      if (weights[l] == 0.0) continue;
      sums.loss += internal::PixelLossGrad(params, features.pixel(l),
                                           labels.data[l], weights[l], probs,
                                           sums.grad);
    }
  }
  LossGradSums total = std::move(partial[0]);
  for (int k = 1; k < kReductionChunks; ++k) {
    total.loss += partial[k].loss;
    total.valid += partial[k].valid;
    for (std::size_t i = 0; i < total.grad.size(); ++i) {
      total.grad[i] += partial[k].grad[i];
    }
  }
  return total;
}

void MetaInnerProducts(const ParamTensor& g_matrix, const ProbMap& probs,
                       const LabelMap& labels, const FeatureMap& features,
                       std::span<double> out, std::span<double> norms) {
  const int n = features.pixels();
#pragma omp parallel for schedule(static)
  for (int l = 0; l < n; ++l) {
    out[l] = internal::PixelMetaProduct(g_matrix, probs.pixel(l),
                                        labels.data[l], features.pixel(l),
                                        norms.empty() ? nullptr : &norms[l]);
  }
}

void ConfusionCounts(const LabelMap& prediction, const LabelMap& truth,
                     int num_classes, std::span<std::int64_t> counts) {
  const int width = truth.width;
  const std::size_t cells = static_cast<std::size_t>(num_classes) * num_classes;
  std::vector<std::int64_t> partial(cells * kReductionChunks, 0);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < kReductionChunks; ++k) {
    std::int64_t* local = partial.data() + cells * k;
    const auto [begin, end] = ChunkRows(truth.height, k);
    for (int l = begin * width; l < end * width; ++l) {
      const int t = truth.data[l];
      const int p = prediction.data[l];
      if (t < num_classes && p < num_classes) ++local[t * num_classes + p];
    }
  }
  for (int k = 0; k < kReductionChunks; ++k) {
    for (std::size_t i = 0; i < cells; ++i) counts[i] += partial[cells * k + i];
  }
}

}  // namespace snd::kernels::omp
