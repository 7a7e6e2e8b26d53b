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

// Evolution stability of target predictions and the stable / unstable split
// of the target set.

#ifndef SND_STABILITY_H_
#define SND_STABILITY_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "snd/tensor.h"
#include "snd/vanilla.h"

namespace snd {

// Sum over pixels of cos(p0_l, ptau_l). Throws InvalidInputError on a shape
// mismatch.
double EvolutionStability(const ProbMap& p0, const ProbMap& ptau);

// Mean per-pixel cosine over pixels whose argmax under p0 is `c`; nullopt
// when there are none.
std::optional<double> ClassStability(const ProbMap& p0, const ProbMap& ptau,
                                     int c);

struct StabilityRecord {
  int sample_id = 0;
  double es = 0.0;
  std::vector<std::optional<double>> es_per_class;
};

// One record per snapshot entry, in id order.
std::vector<StabilityRecord> ScoreSnapshots(const SnapshotStore& store);

struct StableEntry {
  int sample_id = 0;
  LabelMap label;  // frozen pseudo-label under Theta^tau
};

struct Partition {
  std::vector<StableEntry> stable;
  std::vector<int> unstable;
  std::vector<std::vector<StableEntry>> per_class;

  // Order-sensitive hash of every frozen label, for tamper checks.
  std::uint64_t LabelChecksum() const;
};

// ceil(k% * n), computed so that exact products are not rounded up.
int StableCount(int n, double k_percent);

// Top-k% by es (ties to the lower id) become stable; the rest unstable.
// Every list is sorted by id. per_class[c] holds the top-k% of ids by es_per_class[c] whose frozen label
// contains c, at least one when any candidate exists. `labels_at_tau` is
// indexed by sample id. Throws ConfigError when k yields no stable sample.
Partition PartitionSets(const std::vector<StabilityRecord>& records,
                        double k_percent,
                        const std::vector<LabelMap>& labels_at_tau);

// Text manifest, one line per sample:
//   <id> <es> <SE|UE> <m_0 m_1 ... m_{C-1}>
// where m_c is 1 when the sample belongs to per_class[c], else 0.
void WritePartitionManifest(const std::filesystem::path& path,
                            const std::vector<StabilityRecord>& records,
                            const Partition& partition);

// Rebuilds a Partition from a manifest, attaching `labels_at_tau[id]` to
// every stable and per-class member. Throws FormatError on malformed lines.
Partition ReadPartitionManifest(const std::filesystem::path& path,
                                const std::vector<LabelMap>& labels_at_tau,
                                int num_classes);

}  // namespace snd

#endif  // SND_STABILITY_H_
