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

#include "snd/dataset.h"

#include "snd/segmenter.h"

namespace snd {

Dataset Dataset::FromSamples(std::vector<Sample> samples) {
  Dataset d;
  if (!samples.empty()) d.num_classes = samples.front().num_classes;
  d.features.resize(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    d.features[i] = ExtractFeatures(samples[i].image);
  }
  d.samples = std::move(samples);
  return d;
}

}  // namespace snd
