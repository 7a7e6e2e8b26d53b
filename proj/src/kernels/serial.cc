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

#include <vector>

#include "snd/kernels.h"
#include "src/kernels/pixel_ops.h"

namespace snd::kernels::serial {

void ExtractFeatures(const ImageTensor& image, FeatureMap& out) {
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      internal::PixelFeatures(image, y, x, out.pixel(y * image.width + x));
    }
  }
}

void Forward(const ModelParams& params, const FeatureMap& features,
             ProbMap& out) {
  for (int l = 0; l < features.pixels(); ++l) {
    internal::PixelForward(params, features.pixel(l), out.pixel(l));
  }
}

LossGradSums AccumulateLossGrad(const ModelParams& params,
                                const FeatureMap& features,
                                const LabelMap& labels,
                                std::span<const double> weights,
                                std::span<const std::uint8_t> mask) {
  LossGradSums sums;
  sums.grad.assign(params.size(), 0.0);
  std::vector<double> probs(params.classes());
  for (int l = 0; l < features.pixels(); ++l) {
    if (!mask.empty() && mask[l] != 0) continue;
    ++sums.valid;
    if (weights[l] == 0.0) continue;
    sums.loss += internal::PixelLossGrad(params, features.pixel(l),
                                         labels.data[l], weights[l], probs,
                                         sums.grad);
  }
  return sums;
}

void MetaInnerProducts(const ParamTensor& g_matrix, const ProbMap& probs,
                       const LabelMap& labels, const FeatureMap& features,
                       std::span<double> out, std::span<double> norms) {
  for (int l = 0; l < features.pixels(); ++l) {
    out[l] = internal::PixelMetaProduct(g_matrix, probs.pixel(l),
                                        labels.data[l], features.pixel(l),
                                        norms.empty() ? nullptr : &norms[l]);
  }
}

void ConfusionCounts(const LabelMap& prediction, const LabelMap& truth,
                     int num_classes, std::span<std::int64_t> counts) {
  for (int l = 0; l < truth.pixels(); ++l) {
    const int t = truth.data[l];
    const int p = prediction.data[l];
    if (t < num_classes && p < num_classes) ++counts[t * num_classes + p];
  }
}

}  // namespace snd::kernels::serial
