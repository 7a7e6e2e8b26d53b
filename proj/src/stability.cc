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

#include "snd/stability.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "snd/errors.h"
#include "snd/numerics.h"

namespace snd {

namespace {

void CheckShapes(const ProbMap& a, const ProbMap& b) {
  if (a.height != b.height || a.width != b.width || a.classes != b.classes ||
      a.data.size() != b.data.size()) {
    throw InvalidInputError("stability: snapshot shape mismatch");
  }
}

// Ids sorted by descending score, ties to the lower id.
std::vector<int> RankDescending(std::vector<std::pair<int, double>> scored) {
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<int> ids;
  ids.reserve(scored.size());
  for (const auto& [id, score] : scored) ids.push_back(id);
  return ids;
}

const LabelMap& LabelFor(const std::vector<LabelMap>& labels, int id) {
  if (id < 0 || id >= static_cast<int>(labels.size())) {
    throw InvalidInputError("partition: no label for sample " +
                            std::to_string(id));
  }
  return labels[id];
}

}  // namespace

double EvolutionStability(const ProbMap& p0, const ProbMap& ptau) {
  CheckShapes(p0, ptau);
  double sum = 0.0;
  for (int l = 0; l < p0.pixels(); ++l) {
    sum += CosineSimilarity(p0.pixel(l), ptau.pixel(l));
  }
  return sum;
}

std::optional<double> ClassStability(const ProbMap& p0, const ProbMap& ptau,
                                     int c) {
  CheckShapes(p0, ptau);
  double sum = 0.0;
  int n = 0;
  for (int l = 0; l < p0.pixels(); ++l) {
    if (Argmax(p0.pixel(l)) != c) continue;
    sum += CosineSimilarity(p0.pixel(l), ptau.pixel(l));
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::vector<StabilityRecord> ScoreSnapshots(const SnapshotStore& store) {
  std::vector<StabilityRecord> records;
  records.reserve(store.entries().size());
  for (const auto& [id, snap] : store.entries()) {
    records.push_back({id, 0.0, {}});
  }
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& snap = store.at(records[i].sample_id);
    const ProbMap p0 = snap.initial.ToProbMap();
    const ProbMap pt = snap.evolved.ToProbMap();
    records[i].es = EvolutionStability(p0, pt);
    records[i].es_per_class.resize(p0.classes);
    for (int c = 0; c < p0.classes; ++c) {
      records[i].es_per_class[c] = ClassStability(p0, pt, c);
    }
  }
  return records;
}

std::uint64_t Partition::LabelChecksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ULL;
  };
  auto hash_entries = [&](const std::vector<StableEntry>& entries) {
    for (const auto& e : entries) {
      mix(static_cast<std::uint64_t>(e.sample_id));
      for (std::uint16_t v : e.label.data) mix(v);
    }
  };
  hash_entries(stable);
  for (const auto& entries : per_class) hash_entries(entries);
  return h;
}

int StableCount(int n, double k_percent) {
  const double exact = k_percent * n / 100.0;
  const double rounded = std::round(exact * 1e9) / 1e9;
  return static_cast<int>(std::ceil(rounded));
}

Partition PartitionSets(const std::vector<StabilityRecord>& records,
                        double k_percent,
                        const std::vector<LabelMap>& labels_at_tau) {
  if (!(k_percent > 0.0 && k_percent <= 100.0)) {
    throw ConfigError("k_percent must lie in (0, 100]");
  }
  const int n = static_cast<int>(records.size());
  const int count = StableCount(n, k_percent);
  if (count == 0) throw ConfigError("k_percent yields no stable samples");

  std::vector<std::pair<int, double>> scored;
  for (const auto& r : records) scored.emplace_back(r.sample_id, r.es);
  const std::vector<int> ranked = RankDescending(scored);

  Partition p;
  std::vector<int> stable_ids(ranked.begin(), ranked.begin() + count);
  std::vector<int> unstable_ids(ranked.begin() + count, ranked.end());
  std::sort(stable_ids.begin(), stable_ids.end());
  std::sort(unstable_ids.begin(), unstable_ids.end());
  for (int id : stable_ids) p.stable.push_back({id, LabelFor(labels_at_tau, id)});
  p.unstable = std::move(unstable_ids);

  const int classes =
      records.empty() ? 0 : static_cast<int>(records[0].es_per_class.size());
  p.per_class.resize(classes);
  for (int c = 0; c < classes; ++c) {
    std::vector<std::pair<int, double>> candidates;
    for (const auto& r : records) {
      if (!r.es_per_class[c]) continue;
      if (!LabelFor(labels_at_tau, r.sample_id).Contains(c)) continue;
      candidates.emplace_back(r.sample_id, *r.es_per_class[c]);
    }
    if (candidates.empty()) continue;
    std::vector<int> ids = RankDescending(candidates);
    ids.resize(std::min<std::size_t>(ids.size(), std::max(count, 1)));
    std::sort(ids.begin(), ids.end());
    for (int id : ids) p.per_class[c].push_back({id, labels_at_tau[id]});
  }
  return p;
}

void WritePartitionManifest(const std::filesystem::path& path,
                            const std::vector<StabilityRecord>& records,
                            const Partition& partition) {
  std::vector<int> stable;
  for (const auto& e : partition.stable) stable.push_back(e.sample_id);
  std::ofstream out(path);
  if (!out) throw InvalidInputError("cannot write " + path.string());
  out << std::setprecision(17);
  for (const auto& r : records) {
    const bool is_stable =
        std::binary_search(stable.begin(), stable.end(), r.sample_id);
    out << r.sample_id << ' ' << r.es << ' ' << (is_stable ? "SE" : "UE");
    for (const auto& members : partition.per_class) {
      const bool in = std::any_of(members.begin(), members.end(), [&](auto& e) {
        return e.sample_id == r.sample_id;
      });
      out << ' ' << (in ? 1 : 0);
    }
    out << '\n';
  }
}

Partition ReadPartitionManifest(const std::filesystem::path& path,
                                const std::vector<LabelMap>& labels_at_tau,
                                int num_classes) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open partition manifest " + path.string(), 0);
  Partition p;
  p.per_class.resize(num_classes);
  std::string line;
  std::size_t offset = 0;
  std::set<int> seen;
  while (std::getline(in, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    std::istringstream fields(line);
    int id = 0;
    double es = 0.0;
    std::string set;
    if (!(fields >> id >> es >> set) || (set != "SE" && set != "UE")) {
      throw FormatError("malformed partition line", line_start);
    }
    if (id < 0 || id >= static_cast<int>(labels_at_tau.size())) {
      throw FormatError("partition line names unknown sample " +
                            std::to_string(id),
                        line_start);
    }
    if (!seen.insert(id).second) {
      throw FormatError("duplicate sample id in partition manifest", line_start);
    }
    const LabelMap& label = labels_at_tau[id];
    if (set == "SE") {
      p.stable.push_back({id, label});
    } else {
      p.unstable.push_back(id);
    }
    for (int c = 0; c < num_classes; ++c) {
      int member = 0;
      if (!(fields >> member) || (member != 0 && member != 1)) {
        throw FormatError("malformed per-class membership", line_start);
      }
      if (member) p.per_class[c].push_back({id, label});
    }
  }
  auto by_id = [](const StableEntry& a, const StableEntry& b) {
    return a.sample_id < b.sample_id;
  };
  std::sort(p.stable.begin(), p.stable.end(), by_id);
  std::sort(p.unstable.begin(), p.unstable.end());
  for (auto& members : p.per_class) {
    std::sort(members.begin(), members.end(), by_id);
  }
  return p;
}

}  // namespace snd
