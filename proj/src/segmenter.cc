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

#include "snd/segmenter.h"

#include <cmath>

#include "snd/binary_io.h"
#include "snd/errors.h"
#include "snd/kernels.h"
#include "snd/numerics.h"

namespace snd {

namespace {

constexpr std::string_view kCheckpointMagic = "SNDM";
constexpr std::uint16_t kCheckpointVersion = 1;

void CheckShapes(const ModelParams& params, const FeatureMap& features) {
  if (params.dim() != features.dim) {
    throw InvalidInputError("feature dim " + std::to_string(features.dim) +
                            " does not match params dim " +
                            std::to_string(params.dim()));
  }
}

}  // namespace

bool ParamTensor::AllFinite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

FeatureMap ExtractFeatures(const ImageTensor& image) {
  FeatureMap out(image.height, image.width, FeatureDim(image.channels));
  kernels::omp::ExtractFeatures(image, out);
  return out;
}

ModelParams ZeroParams(int classes, int dim) { return ModelParams(classes, dim); }

ModelParams RandomParams(int classes, int dim, std::uint64_t seed,
                         double stddev) {
  ModelParams params(classes, dim);
  Rng rng(seed);
  for (double& v : params.flat()) v = rng.Normal(0.0, stddev);
  return params;
}

ProbMap Forward(const ModelParams& params, const FeatureMap& features) {
  CheckShapes(params, features);
  ProbMap out(features.height, features.width, params.classes());
  kernels::omp::Forward(params, features, out);
  return out;
}

ProbMap Forward(const ModelParams& params, const ImageTensor& image) {
  return Forward(params, ExtractFeatures(image));
}

LabelMap ArgmaxLabels(const ProbMap& probs) {
  LabelMap labels(probs.height, probs.width);
  for (int l = 0; l < probs.pixels(); ++l) {
    labels.data[l] = static_cast<std::uint16_t>(Argmax(probs.pixel(l)));
  }
  return labels;
}

LossAndGradient LossAndGrad(const ModelParams& params,
                            const FeatureMap& features, const LabelMap& labels,
                            const UncertaintyMap& weights,
                            std::span<const std::uint8_t> ignore_mask) {
  CheckShapes(params, features);
  const int n = features.pixels();
  if (labels.height != features.height || labels.width != features.width ||
      weights.height != features.height || weights.width != features.width) {
    throw InvalidInputError("label/weight map shape mismatch");
  }
  if (!ignore_mask.empty() && static_cast<int>(ignore_mask.size()) != n) {
    throw InvalidInputError("ignore mask size mismatch");
  }
  for (int l = 0; l < n; ++l) {
    if (labels.data[l] >= params.classes()) {
      throw InvalidInputError("label out of range at pixel " +
                              std::to_string(l));
    }
    if (!(weights.values[l] >= 0.0) || !std::isfinite(weights.values[l])) {
      throw InvalidInputError("weights must be finite and non-negative");
    }
  }
  auto sums = kernels::omp::AccumulateLossGrad(params, features, labels,
                                               weights.values, ignore_mask);
  LossAndGradient result;
  result.grad = Gradient(params.classes(), params.dim());
  result.valid_pixels = sums.valid;
  if (sums.valid == 0) return result;
  const double inv = 1.0 / sums.valid;
  result.loss = sums.loss * inv;
  auto g = result.grad.flat();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = sums.grad[i] * inv;
  return result;
}

LossAndGradient LossAndGrad(const ModelParams& params, const ImageTensor& image,
                            const LabelMap& labels,
                            const UncertaintyMap& weights,
                            std::span<const std::uint8_t> ignore_mask) {
  return LossAndGrad(params, ExtractFeatures(image), labels, weights,
                     ignore_mask);
}

ModelParams SgdStep(const ModelParams& params, const Gradient& grad, double lr) {
  if (!(lr > 0.0)) throw InvalidInputError("learning rate must be positive");
  if (!params.SameShape(grad)) throw InvalidInputError("gradient shape mismatch");
  if (!grad.AllFinite()) throw NumericError("non-finite gradient");
  ModelParams out = params;
  auto o = out.flat();
  auto g = grad.flat();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= lr * g[i];
  if (!out.AllFinite()) throw NumericError("parameters diverged");
  return out;
}

ModelParams EmaUpdate(const ModelParams& teacher, const ModelParams& student,
                      double momentum) {
  if (!(momentum >= 0.0 && momentum <= 1.0)) {
    throw InvalidInputError("EMA momentum must lie in [0, 1]");
  }
  if (!teacher.SameShape(student)) throw InvalidInputError("EMA shape mismatch");
  ModelParams out = teacher;
  auto o = out.flat();
  auto s = student.flat();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] = momentum * o[i] + (1.0 - momentum) * s[i];
  }
  return out;
}

std::string EncodeCheckpoint(const ModelParams& params) {
  ByteWriter w;
  w.Magic(kCheckpointMagic);
  w.U16(kCheckpointVersion);
  w.U16(static_cast<std::uint16_t>(params.classes()));
  w.U16(static_cast<std::uint16_t>(params.dim()));
  for (double v : params.flat()) w.F32(static_cast<float>(v));
  return w.Take();
}

ModelParams DecodeCheckpoint(std::string_view bytes) {
  ByteReader r(bytes);
  r.ExpectMagic(kCheckpointMagic);
  const std::size_t version_at = r.offset();
  if (r.U16("version") != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version", version_at);
  }
  const int classes = r.U16("classes");
  const int dim = r.U16("dim");
  if (classes == 0 || dim == 0) throw FormatError("empty checkpoint shape", 6);
  ModelParams params(classes, dim);
  for (double& v : params.flat()) v = r.F32("parameter");
  r.ExpectEnd();
  return params;
}

void WriteCheckpoint(const std::filesystem::path& path,
                     const ModelParams& params) {
  WriteFileBytes(path, EncodeCheckpoint(params));
}

ModelParams ReadCheckpoint(const std::filesystem::path& path) {
  return DecodeCheckpoint(ReadFileBytes(path));
}

}  // namespace snd
