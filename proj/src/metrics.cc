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

#include "snd/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "snd/errors.h"
#include "snd/kernels.h"
#include "snd/segmenter.h"

namespace snd {

void ConfusionMatrix::Add(const LabelMap& prediction, const LabelMap& truth) {
  if (prediction.height != truth.height || prediction.width != truth.width) {
    throw InvalidInputError("confusion: prediction/truth shape mismatch");
  }
  kernels::omp::ConfusionCounts(prediction, truth, num_classes_, counts_);
}

std::vector<std::optional<double>> ConfusionMatrix::PerClassIou() const {
  std::vector<std::optional<double>> iou(num_classes_);
  for (int c = 0; c < num_classes_; ++c) {
    std::int64_t tp = at(c, c);
    std::int64_t fn = 0, fp = 0;
    for (int o = 0; o < num_classes_; ++o) {
      if (o == c) continue;
      fn += at(c, o);
      fp += at(o, c);
    }
    const std::int64_t denom = tp + fp + fn;
    if (denom > 0) iou[c] = static_cast<double>(tp) / denom;
  }
  return iou;
}

double ConfusionMatrix::MeanIou() const {
  double sum = 0.0;
  int n = 0;
  for (const auto& v : PerClassIou()) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / n;
}

double ConfusionMatrix::PixelAccuracy() const {
  std::int64_t diag = 0, total = 0;
  for (int t = 0; t < num_classes_; ++t) {
    for (int p = 0; p < num_classes_; ++p) {
      total += at(t, p);
      if (t == p) diag += at(t, p);
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(diag) / total;
}

IouReport EvaluateMiou(const ModelParams& params, const Dataset& dataset) {
  if (dataset.empty()) throw InvalidInputError("evaluate: empty dataset");
  ConfusionMatrix cm(params.classes());
  for (int i = 0; i < dataset.size(); ++i) {
    cm.Add(ArgmaxLabels(Forward(params, dataset.features[i])),
           dataset.samples[i].gt_label);
  }
  return {cm.PerClassIou(), cm.MeanIou()};
}

double PixelAccuracy(const LabelMap& prediction, const LabelMap& truth) {
  if (prediction.data.size() != truth.data.size() || truth.data.empty()) {
    throw InvalidInputError("pixel accuracy: shape mismatch");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.data.size(); ++i) {
    hits += prediction.data[i] == truth.data[i];
  }
  return static_cast<double>(hits) / truth.data.size();
}

namespace {

std::vector<double> AverageRanks(std::span<const double> v) {
  std::vector<int> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * (static_cast<double>(i) + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double SpearmanCorrelation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw InvalidInputError("spearman: need two equal-length series");
  }
  const auto ra = AverageRanks(a);
  const auto rb = AverageRanks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace snd
