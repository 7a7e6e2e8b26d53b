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

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "snd/errors.h"
#include "test_util.h"

namespace snd {
namespace {

namespace fs = std::filesystem;
using testing::RandomLabels;
using testing::RandomProbs;

ProbMap OneHot(int h, int w, int classes, int c) {
  ProbMap p(h, w, classes);
  for (int l = 0; l < p.pixels(); ++l) p.pixel(l)[c] = 1.0;
  return p;
}

std::vector<StabilityRecord> RecordsWithEs(const std::vector<double>& es,
                                           int classes = 0) {
  std::vector<StabilityRecord> records;
  for (std::size_t i = 0; i < es.size(); ++i) {
    StabilityRecord r;
    r.sample_id = static_cast<int>(i);
    r.es = es[i];
    r.es_per_class.assign(classes, std::nullopt);
    records.push_back(r);
  }
  return records;
}

std::vector<LabelMap> UniformLabels(int n) {
  return std::vector<LabelMap>(n, LabelMap(2, 2, 0));
}

std::vector<int> StableIds(const Partition& p) {
  std::vector<int> ids;
  for (const auto& e : p.stable) ids.push_back(e.sample_id);
  return ids;
}

TEST(EvolutionStabilityTest, IdenticalMaps) {
  Rng rng(71);
  const ProbMap p = RandomProbs(2, 2, 3, rng);
  EXPECT_NEAR(EvolutionStability(p, p), 4.0, 1e-12);
}

TEST(EvolutionStabilityTest, OrthogonalOneHot) {
  EXPECT_EQ(EvolutionStability(OneHot(3, 3, 2, 0), OneHot(3, 3, 2, 1)), 0.0);
}

TEST(EvolutionStabilityTest, MatchesCosineSumOracle) {
  Rng rng(72);
  for (int trial = 0; trial < 20; ++trial) {
    const ProbMap a = RandomProbs(4, 4, 5, rng), b = RandomProbs(4, 4, 5, rng);
    double want = 0.0;
    for (int l = 0; l < 16; ++l) {
      double dot = 0, na = 0, nb = 0;
      for (int c = 0; c < 5; ++c) {
        dot += a.pixel(l)[c] * b.pixel(l)[c];
        na += a.pixel(l)[c] * a.pixel(l)[c];
        nb += b.pixel(l)[c] * b.pixel(l)[c];
      }
      want += dot / std::sqrt(na * nb);
    }
    EXPECT_NEAR(EvolutionStability(a, b), want, 1e-9);
  }
}

TEST(EvolutionStabilityTest, ShapeMismatchThrows) {
  EXPECT_THROW(EvolutionStability(ProbMap(2, 2, 3), ProbMap(2, 3, 3)),
               InvalidInputError);
}

TEST(ClassStabilityTest, AllPixelsOfClass) {
  const ProbMap p = OneHot(3, 3, 4, 2);
  EXPECT_NEAR(*ClassStability(p, p, 2), 1.0, 1e-15);
  EXPECT_FALSE(ClassStability(p, p, 1).has_value());
}

TEST(ClassStabilityTest, MatchesMaskedMeanOracle) {
  Rng rng(73);
  for (int trial = 0; trial < 20; ++trial) {
    const ProbMap a = RandomProbs(4, 4, 3, rng), b = RandomProbs(4, 4, 3, rng);
    for (int c = 0; c < 3; ++c) {
      double sum = 0.0;
      int n = 0;
      for (int l = 0; l < 16; ++l) {
        if (Argmax(a.pixel(l)) != c) continue;
        sum += CosineSimilarity(a.pixel(l), b.pixel(l));
        ++n;
      }
      const auto got = ClassStability(a, b, c);
      ASSERT_EQ(got.has_value(), n > 0);
      if (n > 0) EXPECT_NEAR(*got, sum / n, 1e-9);
    }
  }
}

TEST(PartitionSetsTest, RankSelection) {
  const Partition p =
      PartitionSets(RecordsWithEs({0.9, 0.5, 0.7, 0.1}), 50.0, UniformLabels(4));
  EXPECT_EQ(StableIds(p), (std::vector<int>{0, 2}));
  EXPECT_EQ(p.unstable, (std::vector<int>{1, 3}));
}

TEST(PartitionSetsTest, FivePercentOfHundred) {
  std::vector<double> es(100);
  for (int i = 0; i < 100; ++i) es[i] = (i * 37) % 100;
  EXPECT_EQ(PartitionSets(RecordsWithEs(es), 5.0, UniformLabels(100)).stable.size(),
            5u);
}

TEST(PartitionSetsTest, TiesGoToLowerId) {
  std::vector<double> es(10, 0.1);
  es[3] = es[7] = 0.8;
  const Partition p = PartitionSets(RecordsWithEs(es), 10.0, UniformLabels(10));
  EXPECT_EQ(StableIds(p), (std::vector<int>{3}));
}

TEST(PartitionSetsTest, StableCountRounding) {
  EXPECT_EQ(StableCount(100, 5.0), 5);
  EXPECT_EQ(StableCount(300, 5.0), 15);
  EXPECT_EQ(StableCount(300, 2.5), 8);
  EXPECT_EQ(StableCount(30, 10.0), 3);
  EXPECT_EQ(StableCount(70, 10.0), 7);
  EXPECT_EQ(StableCount(10, 0.1), 1);
}

TEST(PartitionSetsTest, InvalidKIsConfigError) {
  const auto records = RecordsWithEs({1, 2, 3});
  EXPECT_THROW(PartitionSets(records, 0.0, UniformLabels(3)), ConfigError);
  EXPECT_THROW(PartitionSets(records, 101.0, UniformLabels(3)), ConfigError);
  EXPECT_THROW(PartitionSets({}, 5.0, {}), ConfigError);
}

class PartitionPropertyTest : public ::testing::TestWithParam<int> {};

TEST_P(PartitionPropertyTest, DisjointCoverScaleInvarianceAndMembership) {
  Rng rng(GetParam());
  const int n = 5 + rng.Index(60), classes = 4;
  std::vector<StabilityRecord> records;
  std::vector<LabelMap> labels;
  for (int i = 0; i < n; ++i) {
    StabilityRecord r;
    r.sample_id = i;
    r.es = std::floor(rng.Uniform(0, 20));  // coarse values force ties
    for (int c = 0; c < classes; ++c) {
      if (rng.Uniform() < 0.7) {
        r.es_per_class.push_back(rng.Uniform());
      } else {
        r.es_per_class.push_back(std::nullopt);
      }
    }
    records.push_back(r);
    labels.push_back(RandomLabels(3, 3, classes, rng));
  }
  const double k = rng.Uniform(1.0, 60.0);
  const Partition p = PartitionSets(records, k, labels);

  std::set<int> all;
  for (const auto& e : p.stable) all.insert(e.sample_id);
  for (int id : p.unstable) {
    EXPECT_FALSE(all.count(id)) << "id in both sets";
    all.insert(id);
  }
  EXPECT_EQ(static_cast<int>(all.size()), n);
  EXPECT_EQ(static_cast<int>(p.stable.size()), StableCount(n, k));
  EXPECT_TRUE(std::is_sorted(p.unstable.begin(), p.unstable.end()));
  for (const auto& e : p.stable) EXPECT_EQ(e.label, labels[e.sample_id]);
  for (int c = 0; c < classes; ++c) {
    for (const auto& e : p.per_class[c]) EXPECT_TRUE(e.label.Contains(c));
  }

  auto scaled = records;
  const double lambda = rng.Uniform(0.01, 100.0);
  for (auto& r : scaled) r.es *= lambda;
  const Partition q = PartitionSets(scaled, k, labels);
  EXPECT_EQ(StableIds(q), StableIds(p));
  EXPECT_EQ(q.unstable, p.unstable);
}

INSTANTIATE_TEST_SUITE_P(RandomRecords, PartitionPropertyTest,
                         ::testing::Range(100, 140));

TEST(PartitionSetsTest, PerClassTopWithLabelContainingClass) {
  auto records = RecordsWithEs({5, 4, 3, 2, 1, 0}, 2);
  std::vector<LabelMap> labels(6, LabelMap(2, 2, 0));
  // Class 1 stability defined for ids 1, 2, 4, 5; only 2, 4, 5 contain it.
  for (int id : {1, 2, 4, 5}) records[id].es_per_class[1] = 0.1 * id;
  for (int id : {2, 4, 5}) labels[id].at(0, 0) = 1;
  const Partition p = PartitionSets(records, 34.0, labels);  // 3 stable
  ASSERT_EQ(p.per_class[1].size(), 3u);
  EXPECT_EQ(p.per_class[1][0].sample_id, 2);
  EXPECT_EQ(p.per_class[1][2].sample_id, 5);
  EXPECT_TRUE(p.per_class[0].empty());
}

TEST(PartitionManifestTest, RoundTrip) {
  Rng rng(74);
  std::vector<StabilityRecord> records;
  std::vector<LabelMap> labels;
  for (int i = 0; i < 30; ++i) {
    StabilityRecord r;
    r.sample_id = i;
    r.es = rng.Uniform(0, 100);
    r.es_per_class = {rng.Uniform(), std::nullopt, rng.Uniform()};
    records.push_back(r);
    labels.push_back(RandomLabels(3, 3, 3, rng));
  }
  const Partition p = PartitionSets(records, 10.0, labels);
  const fs::path path = fs::temp_directory_path() / "snd_partition.txt";
  WritePartitionManifest(path, records, p);
  const Partition q = ReadPartitionManifest(path, labels, 3);
  EXPECT_EQ(StableIds(q), StableIds(p));
  EXPECT_EQ(q.unstable, p.unstable);
  for (int c = 0; c < 3; ++c) {
    ASSERT_EQ(q.per_class[c].size(), p.per_class[c].size());
    for (std::size_t i = 0; i < p.per_class[c].size(); ++i) {
      EXPECT_EQ(q.per_class[c][i].sample_id, p.per_class[c][i].sample_id);
    }
  }
  EXPECT_EQ(q.LabelChecksum(), p.LabelChecksum());
  fs::remove(path);
}

TEST(PartitionManifestTest, MalformedLines) {
  const fs::path path = fs::temp_directory_path() / "snd_partition_bad.txt";
  const std::vector<LabelMap> labels(3, LabelMap(2, 2, 0));
  for (const char* text : {"0 1.5 SE 0\n1 2.0 XX 0\n", "0 1.5 SE\n",
                           "0 1.5 SE 2\n", "9 1.0 UE 0\n",
                           "0 1.0 UE 0\n0 1.0 SE 0\n"}) {
    std::ofstream(path) << text;
    EXPECT_THROW(ReadPartitionManifest(path, labels, 1), FormatError) << text;
  }
  std::ofstream(path) << "0 1.5 SE 0\n1 2.0 XX 0\n";
  try {
    ReadPartitionManifest(path, labels, 1);
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 11u);
  }
  fs::remove(path);
  EXPECT_THROW(ReadPartitionManifest(path, labels, 1), FormatError);
}

TEST(PartitionTest, ChecksumDetectsLabelChange) {
  Rng rng(75);
  std::vector<LabelMap> labels;
  for (int i = 0; i < 4; ++i) labels.push_back(RandomLabels(3, 3, 3, rng));
  Partition p = PartitionSets(RecordsWithEs({4, 3, 2, 1}), 50.0, labels);
  const auto before = p.LabelChecksum();
  p.stable[0].label.data[4] ^= 1;
  EXPECT_NE(p.LabelChecksum(), before);
}

}  // namespace
}  // namespace snd
