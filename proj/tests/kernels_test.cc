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


#include "snd/kernels.h"

#include <gtest/gtest.h>
#include <omp.h>

#include <vector>

#include "snd/segmenter.h"
#include "test_util.h"

namespace snd {
namespace {

using testing::RandomImage;
using testing::RandomLabels;
using testing::RandomModel;
using testing::RandomProbs;
using testing::RandomWeights;
using testing::RelativeError;

struct Instance {
  ImageTensor image;
  FeatureMap features;
  LabelMap labels;
  UncertaintyMap weights;
  ModelParams params;
  std::vector<std::uint8_t> mask;
};

Instance MakeInstance(int h, int w, int classes, Rng& rng) {
  Instance in;
  in.image = RandomImage(h, w, 3, rng);
  in.features = ExtractFeatures(in.image);
  in.labels = RandomLabels(h, w, classes, rng);
  in.weights = RandomWeights(h, w, rng);
  in.params = RandomModel(classes, FeatureDim(3), rng);
  in.mask.resize(static_cast<std::size_t>(h) * w);
  for (auto& m : in.mask) m = rng.Uniform() < 0.2;
  return in;
}

TEST(KernelsTest, FeaturesAgree) {
  Rng rng(41);
  for (auto [h, w] : {std::pair{1, 1}, std::pair{7, 3}, std::pair{48, 48}}) {
    const ImageTensor img = RandomImage(h, w, 3, rng);
    FeatureMap a(h, w, FeatureDim(3)), b(h, w, FeatureDim(3));
    kernels::serial::ExtractFeatures(img, a);
    kernels::omp::ExtractFeatures(img, b);
    EXPECT_EQ(a.data, b.data);
  }
}

TEST(KernelsTest, ForwardAgrees) {
  Rng rng(42);
  const Instance in = MakeInstance(20, 13, 6, rng);
  ProbMap a(20, 13, 6), b(20, 13, 6);
  kernels::serial::Forward(in.params, in.features, a);
  kernels::omp::Forward(in.params, in.features, b);
  EXPECT_EQ(a.data, b.data);
}

TEST(KernelsTest, LossGradAgreesUpToSummationOrder) {
  Rng rng(43);
  for (auto [h, w] : {std::pair{3, 5}, std::pair{17, 9}, std::pair{48, 48}}) {
    const Instance in = MakeInstance(h, w, 6, rng);
    for (bool masked : {false, true}) {
      std::span<const std::uint8_t> mask;
      if (masked) mask = in.mask;
      const auto a = kernels::serial::AccumulateLossGrad(
          in.params, in.features, in.labels, in.weights.values, mask);
      const auto b = kernels::omp::AccumulateLossGrad(
          in.params, in.features, in.labels, in.weights.values, mask);
      EXPECT_EQ(a.valid, b.valid);
      EXPECT_LE(RelativeError(a.loss, b.loss), 1e-13);
      EXPECT_LE(RelativeError(a.grad, b.grad), 1e-13);
    }
  }
}

TEST(KernelsTest, MetaInnerProductsAgree) {
  Rng rng(44);
  const Instance in = MakeInstance(11, 12, 5, rng);
  const ProbMap probs = RandomProbs(11, 12, 5, rng);
  const ModelParams g = RandomModel(5, FeatureDim(3), rng);
  std::vector<double> a(132), b(132), na(132), nb(132);
  kernels::serial::MetaInnerProducts(g, probs, in.labels, in.features, a, na);
  kernels::omp::MetaInnerProducts(g, probs, in.labels, in.features, b, nb);
  EXPECT_EQ(a, b);
  EXPECT_EQ(na, nb);
}

TEST(KernelsTest, ConfusionCountsAgree) {
  Rng rng(45);
  const LabelMap p = RandomLabels(31, 29, 6, rng), t = RandomLabels(31, 29, 6, rng);
  std::vector<std::int64_t> a(36, 0), b(36, 0);
  kernels::serial::ConfusionCounts(p, t, 6, a);
  kernels::omp::ConfusionCounts(p, t, 6, b);
  EXPECT_EQ(a, b);
}

TEST(KernelsTest, OmpResultsIndependentOfThreadCount) {
  Rng rng(46);
  const Instance in = MakeInstance(48, 48, 6, rng);
  const int saved = omp_get_max_threads();
  std::vector<kernels::LossGradSums> runs;
  for (int threads : {1, 2, 3, 8}) {
    omp_set_num_threads(threads);
    runs.push_back(kernels::omp::AccumulateLossGrad(
        in.params, in.features, in.labels, in.weights.values, in.mask));
  }
  omp_set_num_threads(saved);
  for (const auto& r : runs) {
    EXPECT_EQ(r.loss, runs[0].loss);
    EXPECT_EQ(r.grad, runs[0].grad);
  }
}

}  // namespace
}  // namespace snd
