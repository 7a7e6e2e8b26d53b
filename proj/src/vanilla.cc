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

#include "snd/vanilla.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "snd/binary_io.h"
#include "snd/errors.h"
#include "snd/segmenter.h"

namespace snd {

namespace {

constexpr std::string_view kSnapshotMagic = "SNDP";
constexpr std::uint16_t kSnapshotVersion = 1;

// Mean of per-sample gradients over a batch.
Gradient BatchGradient(const ModelParams& params, const Dataset& data,
                       const std::vector<int>& batch,
                       const std::vector<LabelMap>& labels, double* mean_loss) {
  Gradient total(params.classes(), params.dim());
  double loss = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const FeatureMap& f = data.features[batch[b]];
    const UncertaintyMap ones = UncertaintyMap::Ones(f.height, f.width);
    auto lg = LossAndGrad(params, f, labels[b], ones);
    loss += lg.loss;
    auto t = total.flat();
    auto g = lg.grad.flat();
    for (std::size_t i = 0; i < t.size(); ++i) t[i] += g[i];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double& v : total.flat()) v *= inv;
  *mean_loss = loss * inv;
  if (!std::isfinite(*mean_loss)) throw NumericError("training loss diverged");
  return total;
}

std::vector<int> AllIds(const Dataset& data) {
  std::vector<int> ids(data.size());
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

std::string SnapshotFileName(int id) {
  std::ostringstream name;
  name << "snap_" << std::setw(5) << std::setfill('0') << id << ".sndp";
  return name.str();
}

}  // namespace

PseudoLabels PseudoLabel(const ModelParams& params, const FeatureMap& features) {
  PseudoLabels out;
  out.probs = Forward(params, features);
  out.labels = ArgmaxLabels(out.probs);
  return out;
}

EpochSampler::EpochSampler(std::vector<int> ids, std::uint64_t seed)
    : ids_(std::move(ids)), rng_(seed) {
  if (ids_.empty()) throw InvalidInputError("sampler over an empty id set");
  Reshuffle();
}

void EpochSampler::Reshuffle() {
  order_ = ids_;
  std::shuffle(order_.begin(), order_.end(), rng_.engine());
  cursor_ = 0;
}

std::vector<int> EpochSampler::NextBatch(int batch_size) {
  std::vector<int> batch;
  batch.reserve(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    if (cursor_ == order_.size()) Reshuffle();
    batch.push_back(order_[cursor_++]);
  }
  return batch;
}

TrainResult PretrainSource(const ModelParams& init, const Dataset& source,
                           const SgdConfig& config) {
  TrainResult result{init, {}};
  if (config.iterations == 0) return result;
  if (source.empty()) throw InvalidInputError("pretraining on empty dataset");
  EpochSampler sampler(AllIds(source), MixSeed(config.seed, 0x50));
  result.loss_history.reserve(config.iterations);
  for (int it = 0; it < config.iterations; ++it) {
    const auto batch = sampler.NextBatch(config.batch_size);
    std::vector<LabelMap> labels;
    for (int id : batch) labels.push_back(source.samples[id].gt_label);
    double loss = 0.0;
    const Gradient g = BatchGradient(result.params, source, batch, labels, &loss);
    result.loss_history.push_back(loss);
    result.params = SgdStep(result.params, g, config.lr);
  }
  return result;
}

QuantizedProbMap QuantizedProbMap::FromProbMap(const ProbMap& probs) {
  QuantizedProbMap q;
  q.height = probs.height;
  q.width = probs.width;
  q.classes = probs.classes;
  q.data.resize(probs.data.size());
  for (std::size_t i = 0; i < probs.data.size(); ++i) {
    const double v = std::clamp(probs.data[i], 0.0, 1.0);
    q.data[i] = static_cast<std::uint16_t>(std::lround(v * 65535.0));
  }
  return q;
}

ProbMap QuantizedProbMap::ToProbMap() const {
  ProbMap p(height, width, classes);
  for (std::size_t i = 0; i < data.size(); ++i) p.data[i] = data[i] / 65535.0;
  return p;
}

void SnapshotStore::SetInitial(int id, const ProbMap& probs) {
  entries_[id].initial = QuantizedProbMap::FromProbMap(probs);
}

void SnapshotStore::SetEvolved(int id, const ProbMap& probs) {
  entries_[id].evolved = QuantizedProbMap::FromProbMap(probs);
}

bool SnapshotStore::CompleteFor(const std::vector<int>& ids) const {
  for (int id : ids) {
    auto it = entries_.find(id);
    if (it == entries_.end()) return false;
    const auto& s = it->second;
    if (s.initial.data.empty() || s.evolved.data.empty()) return false;
    if (s.initial.height != s.evolved.height ||
        s.initial.width != s.evolved.width ||
        s.initial.classes != s.evolved.classes) {
      return false;
    }
  }
  return true;
}

const PredictionSnapshot& SnapshotStore::at(int id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) {
    throw InvalidInputError("no snapshot for sample " + std::to_string(id));
  }
  return it->second;
}

VanillaResult VanillaSelfTrain(const ModelParams& params, const Dataset& target,
                               int tau, const SgdConfig& config) {
  if (target.empty()) throw InvalidInputError("self-training on empty dataset");
  if (tau < 0) throw InvalidInputError("tau must be non-negative");
  VanillaResult result{params, {}, {}};
  // Theta^0 snapshots strictly before the first update.
  for (int i = 0; i < target.size(); ++i) {
    result.snapshots.SetInitial(i, Forward(params, target.features[i]));
  }
  if (tau == 0) {
    spdlog::warn("tau = 0: stability snapshots coincide, every ES is maximal");
  }
  EpochSampler sampler(AllIds(target), MixSeed(config.seed, 0x56));
  result.loss_history.reserve(tau);
  for (int it = 0; it < tau; ++it) {
    const auto batch = sampler.NextBatch(config.batch_size);
    std::vector<LabelMap> labels;
    for (int id : batch) {
      labels.push_back(PseudoLabel(result.params, target.features[id]).labels);
    }
    double loss = 0.0;
    const Gradient g =
        BatchGradient(result.params, target, batch, labels, &loss);
    result.loss_history.push_back(loss);
    result.params = SgdStep(result.params, g, config.lr);
  }
  for (int i = 0; i < target.size(); ++i) {
    result.snapshots.SetEvolved(i, Forward(result.params, target.features[i]));
  }
  return result;
}

std::string EncodeSnapshot(const PredictionSnapshot& snapshot) {
  const auto& a = snapshot.initial;
  const auto& b = snapshot.evolved;
  if (a.height != b.height || a.width != b.width || a.classes != b.classes) {
    throw InvalidInputError("snapshot shape mismatch");
  }
  ByteWriter w;
  w.Magic(kSnapshotMagic);
  w.U16(kSnapshotVersion);
  w.U16(static_cast<std::uint16_t>(a.height));
  w.U16(static_cast<std::uint16_t>(a.width));
  w.U16(static_cast<std::uint16_t>(a.classes));
  for (auto v : a.data) w.U16(v);
  for (auto v : b.data) w.U16(v);
  return w.Take();
}

PredictionSnapshot DecodeSnapshot(std::string_view bytes) {
  ByteReader r(bytes);
  r.ExpectMagic(kSnapshotMagic);
  const std::size_t version_at = r.offset();
  if (r.U16("version") != kSnapshotVersion) {
    throw FormatError("unsupported snapshot version", version_at);
  }
  PredictionSnapshot s;
  const int h = r.U16("height");
  const int w = r.U16("width");
  const int c = r.U16("classes");
  for (QuantizedProbMap* q : {&s.initial, &s.evolved}) {
    q->height = h;
    q->width = w;
    q->classes = c;
    q->data.resize(static_cast<std::size_t>(h) * w * c);
    for (auto& v : q->data) v = r.U16("probability");
  }
  r.ExpectEnd();
  return s;
}

void WriteSnapshots(const SnapshotStore& store,
                    const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [id, snap] : store.entries()) {
    WriteFileBytes(dir / SnapshotFileName(id), EncodeSnapshot(snap));
  }
}

SnapshotStore ReadSnapshots(const std::filesystem::path& dir) {
  SnapshotStore store;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".sndp") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    const std::string stem = path.stem().string();  // snap_00012
    const auto underscore = stem.find('_');
    if (underscore == std::string::npos) {
      throw FormatError("unexpected snapshot file name " + stem, 0);
    }
    const int id = std::stoi(stem.substr(underscore + 1));
    store.Insert(id, DecodeSnapshot(ReadFileBytes(path)));
  }
  return store;
}

}  // namespace snd
