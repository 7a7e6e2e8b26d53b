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


// Class compensation of a retrieved neighbor by pasting whole-class object
// masks from stable donors.

#ifndef SND_COMPENSATION_H_
#define SND_COMPENSATION_H_

#include <cstdint>
#include <functional>
#include <vector>

#include "snd/numerics.h"
#include "snd/stability.h"
#include "snd/tensor.h"

namespace snd {

struct Provenance {
  int class_id = 0;
  int donor_id = 0;
  int pixel_count = 0;  // pixels of class_id still showing in the output
};

struct CompensatedNeighbor {
  ImageTensor image;
  LabelMap label;
  std::vector<Provenance> provenance;
};

inline constexpr int kBackgroundClass = 0;

// Non-background classes present in `unstable_pseudo` but absent from
// `neighbor_label`, ascending.
std::vector<int> MissingClasses(const LabelMap& unstable_pseudo,
                                const LabelMap& neighbor_label);

// Copies every donor pixel of class `c` (image and label) into `target` at
// the same coordinates and appends provenance. Counts of earlier provenance
// entries are reduced where the paste overwrites them. Throws
// InvalidInputError if the donor has no pixel of class `c` or shapes differ.
void CopyPaste(CompensatedNeighbor& target, const ImageTensor& donor_image,
               const LabelMap& donor_label, int c, int donor_id);

// Resolves a donor id to its image.
using DonorImageFn = std::function<const ImageTensor&(int)>;

// For every missing class, pastes one donor drawn uniformly from
// per_class[c]. Classes without donors are skipped and logged.
CompensatedNeighbor Compensate(const ImageTensor& neighbor_image,
                               const LabelMap& neighbor_label,
                               const LabelMap& unstable_pseudo,
                               const Partition& partition,
                               const DonorImageFn& donor_image, Rng& rng);

}  // namespace snd

#endif  // SND_COMPENSATION_H_
