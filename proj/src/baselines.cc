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


#include "snd/baselines.h"

#include <algorithm>
#include <cmath>

#include "snd/numerics.h"

namespace snd {

UncertaintyMap EntropyWeight(const ProbMap& probs) {
  UncertaintyMap out(probs.height, probs.width);
  const double log_c = std::log(static_cast<double>(probs.classes));
  for (int l = 0; l < probs.pixels(); ++l) {
    double entropy = 0.0;
    for (double p : probs.pixel(l)) {
      if (p > 0.0) entropy -= p * std::log(p);
    }
    out.values[l] = log_c > 0.0 ? std::clamp(1.0 - entropy / log_c, 0.0, 1.0)
                                : 1.0;
  }
  return out;
}

std::vector<std::optional<std::vector<double>>> ComputePrototypes(
    const std::vector<const FeatureMap*>& features,
    const std::vector<const LabelMap*>& pseudo, int num_classes) {
  const int dim = features.empty() ? 0 : features[0]->dim;
  std::vector<std::vector<double>> sums(num_classes,
                                        std::vector<double>(dim, 0.0));
  std::vector<std::int64_t> counts(num_classes, 0);
  for (std::size_t s = 0; s < features.size(); ++s) {
    for (int l = 0; l < features[s]->pixels(); ++l) {
      const int c = pseudo[s]->data[l];
      const auto phi = features[s]->pixel(l);
      for (int f = 0; f < dim; ++f) sums[c][f] += phi[f];
      ++counts[c];
    }
  }
  std::vector<std::optional<std::vector<double>>> out(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) continue;
    for (double& v : sums[c]) v /= static_cast<double>(counts[c]);
    out[c] = std::move(sums[c]);
  }
  return out;
}

UncertaintyMap PrototypeWeight(
    const FeatureMap& features, const LabelMap& pseudo,
    const std::vector<std::optional<std::vector<double>>>& prototypes) {
  UncertaintyMap out(features.height, features.width);
  for (int l = 0; l < features.pixels(); ++l) {
    const int c = pseudo.data[l];
    if (c >= static_cast<int>(prototypes.size()) || !prototypes[c]) continue;
    out.values[l] =
        std::max(0.0, CosineSimilarity(features.pixel(l), *prototypes[c]));
  }
  return out;
}

WeightFn UnweightedFn() {
  return [](const ModelParams&, const std::vector<BatchItem>& batch, int) {
    std::vector<UncertaintyMap> out;
    for (const auto& item : batch) {
      out.push_back(UncertaintyMap::Ones(item.features->height,
                                         item.features->width));
    }
    return out;
  };
}

WeightFn EntropyWeightFn() {
  return [](const ModelParams&, const std::vector<BatchItem>& batch, int) {
    std::vector<UncertaintyMap> out;
    for (const auto& item : batch) out.push_back(EntropyWeight(item.pseudo.probs));
    return out;
  };
}

WeightFn PrototypeWeightFn(int num_classes) {
  return [num_classes](const ModelParams&, const std::vector<BatchItem>& batch,
                       int) {
    std::vector<const FeatureMap*> features;
    std::vector<const LabelMap*> labels;
    for (const auto& item : batch) {
      features.push_back(item.features);
      labels.push_back(&item.pseudo.labels);
    }
    const auto prototypes = ComputePrototypes(features, labels, num_classes);
    std::vector<UncertaintyMap> out;
    for (const auto& item : batch) {
      out.push_back(
          PrototypeWeight(*item.features, item.pseudo.labels, prototypes));
    }
    return out;
  };
}

}  // namespace snd
