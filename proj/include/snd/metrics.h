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

#ifndef SND_METRICS_H_
#define SND_METRICS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "snd/dataset.h"
#include "snd/params.h"
#include "snd/tensor.h"

namespace snd {

// Dataset-level confusion counts, rows = ground truth, cols = prediction.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes)
      : num_classes_(num_classes),
        counts_(static_cast<std::size_t>(num_classes) * num_classes, 0) {}

  void Add(const LabelMap& prediction, const LabelMap& truth);
  std::int64_t at(int truth, int prediction) const {
    return counts_[static_cast<std::size_t>(truth) * num_classes_ + prediction];
  }
  int num_classes() const { return num_classes_; }

  // TP / (TP + FP + FN); nullopt for classes absent from both prediction and
  // ground truth.
  std::vector<std::optional<double>> PerClassIou() const;
  // Mean over the classes that have an IoU.
  double MeanIou() const;
  double PixelAccuracy() const;

 private:
  int num_classes_;
  std::vector<std::int64_t> counts_;
};

struct IouReport {
  std::vector<std::optional<double>> per_class;
  double miou = 0.0;
};

// Argmax predictions of `params` against every sample's gt_label. Throws
// InvalidInputError on an empty dataset.
IouReport EvaluateMiou(const ModelParams& params, const Dataset& dataset);

// Fraction of pixels where `prediction` equals `truth`.
double PixelAccuracy(const LabelMap& prediction, const LabelMap& truth);

// Spearman rank correlation with average ranks for ties.
double SpearmanCorrelation(std::span<const double> a, std::span<const double> b);

}  // namespace snd

#endif  // SND_METRICS_H_
