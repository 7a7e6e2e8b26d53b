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

// Per-pixel inner loops of the segmenter and the meta-gradient.
//
// Two implementations with identical signatures:
//   kernels::serial  straightforward pixel loops, the reference for tests.
//   kernels::omp     OpenMP row-parallel versions used by the library.
//
// The OpenMP reductions split the image into kReductionChunks fixed row
// blocks and combine the partial sums in block order, so their results do
// not depend on the thread count. They differ from the serial reference only
// by summation order.
//
// No argument validation happens here; callers in segmenter.cc and
// bilevel.cc check shapes.

#ifndef SND_KERNELS_H_
#define SND_KERNELS_H_

#include <cstdint>
#include <span>
#include <vector>

#include "snd/params.h"
#include "snd/tensor.h"

namespace snd::kernels {

inline constexpr int kReductionChunks = 8;

// Sum of weighted per-pixel losses and gradients; not yet divided by
// `valid`.
struct LossGradSums {
  double loss = 0.0;
  int valid = 0;
  std::vector<double> grad;  // ParamTensor layout
};

namespace serial {

// 3x3 box mean and Sobel x/y per channel plus a constant 1, replicate pad.
void ExtractFeatures(const ImageTensor& image, FeatureMap& out);
// softmax(W phi_l + b) for every pixel.
void Forward(const ModelParams& params, const FeatureMap& features,
             ProbMap& out);
// Weighted loss and gradient sums over pixels with mask[l] == 0 (an empty
// mask marks every pixel valid).
LossGradSums AccumulateLossGrad(const ModelParams& params,
                                const FeatureMap& features,
                                const LabelMap& labels,
                                std::span<const double> weights,
                                std::span<const std::uint8_t> mask);
// out[l] = (p_l - e_{y_l})^T G [phi_l; 1]. When `norms` is non-empty it
// receives |g_l| = |p_l - e_{y_l}| * |[phi_l; 1]|.
void MetaInnerProducts(const ParamTensor& g_matrix, const ProbMap& probs,
                       const LabelMap& labels, const FeatureMap& features,
                       std::span<double> out, std::span<double> norms);
// counts[truth * C + prediction] += 1 per pixel.
void ConfusionCounts(const LabelMap& prediction, const LabelMap& truth,
                     int num_classes, std::span<std::int64_t> counts);

}  // namespace serial

namespace omp {

// Same contracts as serial::.
void ExtractFeatures(const ImageTensor& image, FeatureMap& out);
void Forward(const ModelParams& params, const FeatureMap& features,
             ProbMap& out);
LossGradSums AccumulateLossGrad(const ModelParams& params,
                                const FeatureMap& features,
                                const LabelMap& labels,
                                std::span<const double> weights,
                                std::span<const std::uint8_t> mask);
void MetaInnerProducts(const ParamTensor& g_matrix, const ProbMap& probs,
                       const LabelMap& labels, const FeatureMap& features,
                       std::span<double> out, std::span<double> norms);
void ConfusionCounts(const LabelMap& prediction, const LabelMap& truth,
                     int num_classes, std::span<std::int64_t> counts);

}  // namespace omp

}  // namespace snd::kernels

#endif  // SND_KERNELS_H_
