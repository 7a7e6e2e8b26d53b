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


// Pixel-weighting baselines that share the adaptation loop with SND.

#ifndef SND_BASELINES_H_
#define SND_BASELINES_H_

#include <optional>
#include <vector>

#include "snd/bilevel.h"
#include "snd/tensor.h"

namespace snd {

// omega_l = 1 - H(p_l) / ln C.
UncertaintyMap EntropyWeight(const ProbMap& probs);

// Per-class mean feature over pixels pseudo-labeled as that class across
// the batch; nullopt for classes with no pixel.
std::vector<std::optional<std::vector<double>>> ComputePrototypes(
    const std::vector<const FeatureMap*>& features,
    const std::vector<const LabelMap*>& pseudo, int num_classes);

// omega_l = max(0, cos(phi_l, prototype[y_l])); 1 where the prototype is
// absent.
UncertaintyMap PrototypeWeight(
    const FeatureMap& features, const LabelMap& pseudo,
    const std::vector<std::optional<std::vector<double>>>& prototypes);

WeightFn UnweightedFn();
WeightFn EntropyWeightFn();
WeightFn PrototypeWeightFn(int num_classes);

}  // namespace snd

#endif  // SND_BASELINES_H_
