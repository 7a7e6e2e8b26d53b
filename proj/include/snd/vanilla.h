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

// Source pretraining and vanilla self-training on the target. The vanilla
// stage records, for every target sample, its prediction under the
// source model and under the model after tau self-training iterations.

#ifndef SND_VANILLA_H_
#define SND_VANILLA_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "snd/dataset.h"
#include "snd/numerics.h"
#include "snd/params.h"
#include "snd/tensor.h"

namespace snd {

struct PseudoLabels {
  LabelMap labels;
  ProbMap probs;
};

// Argmax pseudo-label (ties toward the lower class) with its ProbMap.
PseudoLabels PseudoLabel(const ModelParams& params, const FeatureMap& features);

struct SgdConfig {
  int iterations = 1500;
  double lr = 1.0;
  int batch_size = 4;
  std::uint64_t seed = 0;
};

// Per-epoch shuffled mini-batches, deterministic in the seed.
class EpochSampler {
 public:
  EpochSampler(std::vector<int> ids, std::uint64_t seed);
  std::vector<int> NextBatch(int batch_size);

 private:
  void Reshuffle();

  std::vector<int> ids_;
  std::vector<int> order_;
  std::size_t cursor_ = 0;
  Rng rng_;
};

struct TrainResult {
  ModelParams params;
  std::vector<double> loss_history;  // one entry per iteration
};

// Unweighted cross-entropy SGD on labeled source samples. Throws
// NumericError if the loss diverges.
TrainResult PretrainSource(const ModelParams& init, const Dataset& source,
                           const SgdConfig& config);

// Prob map stored as 16-bit fixed point, q = round(p * 65535).
struct QuantizedProbMap {
  int height = 0;
  int width = 0;
  int classes = 0;
  std::vector<std::uint16_t> data;

  static QuantizedProbMap FromProbMap(const ProbMap& probs);
  ProbMap ToProbMap() const;
  bool operator==(const QuantizedProbMap&) const = default;
};

// Largest per-entry error introduced by quantization.
inline constexpr double kQuantizationBound = 0.5 / 65535.0;

struct PredictionSnapshot {
  QuantizedProbMap initial;  // under Theta^0
  QuantizedProbMap evolved;  // under Theta^tau
  bool operator==(const PredictionSnapshot&) const = default;
};

class SnapshotStore {
 public:
  void SetInitial(int id, const ProbMap& probs);
  void SetEvolved(int id, const ProbMap& probs);
  // True when every id has both snapshots with matching shapes.
  bool CompleteFor(const std::vector<int>& ids) const;
  const PredictionSnapshot& at(int id) const;
  const std::map<int, PredictionSnapshot>& entries() const { return entries_; }
  void Insert(int id, PredictionSnapshot snapshot) {
    entries_[id] = std::move(snapshot);
  }

 private:
  std::map<int, PredictionSnapshot> entries_;
};

struct VanillaResult {
  ModelParams params;  // Theta^tau
  SnapshotStore snapshots;
  std::vector<double> loss_history;
};

// Records Theta^0 predictions for every target sample, runs tau iterations of
// unweighted self-training with pseudo-labels regenerated from the current
// model whenever a sample is visited, then records Theta^tau predictions.
// tau == 0 is legal (both snapshots under Theta^0) and logged.
VanillaResult VanillaSelfTrain(const ModelParams& params, const Dataset& target,
                               int tau, const SgdConfig& config);

// "SNDP" per-sample file: magic, u16 version, u16 H, u16 W, u16 C, then the
// Theta^0 and Theta^tau maps as u16 fixed point.
std::string EncodeSnapshot(const PredictionSnapshot& snapshot);
PredictionSnapshot DecodeSnapshot(std::string_view bytes);
void WriteSnapshots(const SnapshotStore& store, const std::filesystem::path& dir);
SnapshotStore ReadSnapshots(const std::filesystem::path& dir);

}  // namespace snd

#endif  // SND_VANILLA_H_
