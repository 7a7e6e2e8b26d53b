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

// The pixelwise segmenter: a fixed filter bank phi(x) followed by a learned
// linear softmax head, p_l = softmax(W phi_l + b).
//
// With a linear head the per-pixel loss gradient factorizes as
// (p_l - e_y) x [phi_l; 1], which the meta-gradient in bilevel.h relies on.

#ifndef SND_SEGMENTER_H_
#define SND_SEGMENTER_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "snd/params.h"
#include "snd/tensor.h"

namespace snd {

// F = 4 * C_img + 1: raw, 3x3 box mean, Sobel x, Sobel y per channel and a
// constant term.
constexpr int FeatureDim(int image_channels) { return 4 * image_channels + 1; }

FeatureMap ExtractFeatures(const ImageTensor& image);

// Zero-initialized parameters for `classes` classes over features of `dim`.
ModelParams ZeroParams(int classes, int dim);

ProbMap Forward(const ModelParams& params, const FeatureMap& features);
ProbMap Forward(const ModelParams& params, const ImageTensor& image);

// Per-pixel argmax, ties toward the lower class index.
LabelMap ArgmaxLabels(const ProbMap& probs);

struct LossAndGradient {
  double loss = 0.0;
  Gradient grad;
  int valid_pixels = 0;
};

// Weighted mean cross-entropy over unmasked pixels and its exact gradient:
//   loss = sum_l w_l CE(p_l, y_l) / N_valid
//   grad = sum_l w_l (p_l - e_{y_l}) x [phi_l; 1] / N_valid
// `ignore_mask` is empty or one byte per pixel, nonzero meaning excluded.
// A fully masked sample yields zero loss and zero gradient.
LossAndGradient LossAndGrad(const ModelParams& params,
                            const FeatureMap& features, const LabelMap& labels,
                            const UncertaintyMap& weights,
                            std::span<const std::uint8_t> ignore_mask = {});
LossAndGradient LossAndGrad(const ModelParams& params, const ImageTensor& image,
                            const LabelMap& labels,
                            const UncertaintyMap& weights,
                            std::span<const std::uint8_t> ignore_mask = {});

// params - lr * grad. Throws NumericError on a non-finite gradient.
ModelParams SgdStep(const ModelParams& params, const Gradient& grad, double lr);

// momentum * teacher + (1 - momentum) * student.
ModelParams EmaUpdate(const ModelParams& teacher, const ModelParams& student,
                      double momentum);

// Small Gaussian initialization, deterministic in `seed`.
ModelParams RandomParams(int classes, int dim, std::uint64_t seed,
                         double stddev);

// "SNDM" checkpoint: magic, u16 version, u16 classes, u16 dim, then weights
// row-major and bias as little-endian float32.
std::string EncodeCheckpoint(const ModelParams& params);
ModelParams DecodeCheckpoint(std::string_view bytes);
void WriteCheckpoint(const std::filesystem::path& path,
                     const ModelParams& params);
ModelParams ReadCheckpoint(const std::filesystem::path& path);

}  // namespace snd

#endif  // SND_SEGMENTER_H_
