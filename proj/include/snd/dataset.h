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

#ifndef SND_DATASET_H_
#define SND_DATASET_H_

#include <vector>

#include "snd/synth.h"
#include "snd/tensor.h"

namespace snd {

// Samples with their (fixed) filter-bank features cached alongside.
struct Dataset {
  std::vector<Sample> samples;
  std::vector<FeatureMap> features;
  int num_classes = kNumSceneClasses;

  int size() const { return static_cast<int>(samples.size()); }
  bool empty() const { return samples.empty(); }

  static Dataset FromSamples(std::vector<Sample> samples);
};

}  // namespace snd

#endif  // SND_DATASET_H_
