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


#include "snd/compensation.h"

#include <spdlog/spdlog.h>

#include "snd/errors.h"

namespace snd {

std::vector<int> MissingClasses(const LabelMap& unstable_pseudo,
                                const LabelMap& neighbor_label) {
  int max_class = 0;
  for (auto v : unstable_pseudo.data) max_class = std::max<int>(max_class, v);
  for (auto v : neighbor_label.data) max_class = std::max<int>(max_class, v);
  const auto have = unstable_pseudo.Histogram(max_class + 1);
  const auto neib = neighbor_label.Histogram(max_class + 1);
  std::vector<int> missing;
  for (int c = 0; c <= max_class; ++c) {
    if (c != kBackgroundClass && have[c] > 0 && neib[c] == 0) {
      missing.push_back(c);
    }
  }
  return missing;
}

void CopyPaste(CompensatedNeighbor& target, const ImageTensor& donor_image,
               const LabelMap& donor_label, int c, int donor_id) {
  if (donor_label.height != target.label.height ||
      donor_label.width != target.label.width ||
      donor_image.height != target.image.height ||
      donor_image.width != target.image.width ||
      donor_image.channels != target.image.channels) {
    throw InvalidInputError("copy-paste: donor shape mismatch");
  }
  if (!donor_label.Contains(c)) {
    throw InvalidInputError("copy-paste: donor lacks class " +
                            std::to_string(c));
  }
  const int channels = target.image.channels;
  int pasted = 0;
  for (std::size_t l = 0; l < donor_label.data.size(); ++l) {
    if (donor_label.data[l] != c) continue;
    const int previous = target.label.data[l];
    for (auto& p : target.provenance) {
      if (p.class_id == previous && previous != c) --p.pixel_count;
    }
    target.label.data[l] = static_cast<std::uint16_t>(c);
    for (int ch = 0; ch < channels; ++ch) {
      target.image.data[l * channels + ch] = donor_image.data[l * channels + ch];
    }
    ++pasted;
  }
  target.provenance.push_back({c, donor_id, pasted});
}

CompensatedNeighbor Compensate(const ImageTensor& neighbor_image,
                               const LabelMap& neighbor_label,
                               const LabelMap& unstable_pseudo,
                               const Partition& partition,
                               const DonorImageFn& donor_image, Rng& rng) {
  CompensatedNeighbor out{neighbor_image, neighbor_label, {}};
  for (int c : MissingClasses(unstable_pseudo, neighbor_label)) {
    if (c >= static_cast<int>(partition.per_class.size()) ||
        partition.per_class[c].empty()) {
      spdlog::debug("compensation: no stable donor for class {}", c);
      continue;
    }
    const auto& donors = partition.per_class[c];
    const StableEntry& donor = donors[rng.Index(static_cast<int>(donors.size()))];
    CopyPaste(out, donor_image(donor.sample_id), donor.label, c,
              donor.sample_id);
  }
  return out;
}

}  // namespace snd
