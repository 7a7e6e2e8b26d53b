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


#include "snd/bilevel.h"

#include <gtest/gtest.h>

#include "snd/baselines.h"
#include "snd/errors.h"
#include "snd/segmenter.h"
#include "snd/stability.h"
#include "snd/synth.h"
#include "snd/vanilla.h"
#include "test_util.h"

namespace snd {
namespace {

using testing::RandomImage;
using testing::RandomLabels;
using testing::RandomModel;
using testing::RelativeError;

BilevelConfig RawConfig() {
  BilevelConfig c;
  c.normalize_meta = false;
  c.omega_max = 1e9;
  return c;
}

// Stable loss after one inner step with weights `omega`.
double StableLossAt(const ModelParams& teacher, const FeatureMap& fu,
                    const LabelMap& yu, const UncertaintyMap& omega,
                    const FeatureMap& fn, const LabelMap& yn, double alpha) {
  const ModelParams inner = InnerStep(teacher, fu, yu, omega, alpha);
  return LossAndGrad(inner, fn, yn, UncertaintyMap::Ones(fn.height, fn.width)).loss;
}

TEST(InnerStepTest, OnesIsOneSgdStep) {
  Rng rng(101);
  const FeatureMap f = ExtractFeatures(RandomImage(6, 6, 3, rng));
  const LabelMap y = RandomLabels(6, 6, 4, rng);
  const ModelParams t = RandomModel(4, 13, rng);
  const auto ones = UncertaintyMap::Ones(6, 6);
  EXPECT_EQ(InnerStep(t, f, y, ones, 0.01),
            SgdStep(t, LossAndGrad(t, f, y, ones).grad, 0.01));
  EXPECT_EQ(InnerStep(t, f, y, UncertaintyMap(6, 6, 0.0), 0.01), t);
}

TEST(InnerStepTest, MatchesTwoCallComposition) {
  Rng rng(102);
  for (int trial = 0; trial < 10; ++trial) {
    const FeatureMap f = ExtractFeatures(RandomImage(6, 6, 3, rng));
    const LabelMap y = RandomLabels(6, 6, 4, rng);
    const ModelParams t = RandomModel(4, 13, rng);
    const UncertaintyMap w = testing::RandomWeights(6, 6, rng);
    EXPECT_EQ(InnerStep(t, f, y, w, 0.3),
              SgdStep(t, LossAndGrad(t, f, y, w).grad, 0.3));
  }
}

TEST(EstimateOmegaTest, AlignedSinglePixelUpweights) {
  Rng rng(103);
  const FeatureMap f = ExtractFeatures(RandomImage(1, 1, 3, rng));
  const ModelParams t = RandomModel(3, 13, rng, 0.2);
  const LabelMap y(1, 1, 2);
  const BilevelConfig cfg = RawConfig();
  const auto est = EstimateOmega(t, f, y, f, y, cfg);
  const auto g = LossAndGrad(t, f, y, UncertaintyMap::Ones(1, 1)).grad;
  const auto inner = InnerStep(t, f, y, UncertaintyMap::Ones(1, 1), cfg.alpha);
  const auto gs = LossAndGrad(inner, f, y, UncertaintyMap::Ones(1, 1)).grad;
  EXPECT_NEAR(est.raw_delta[0], cfg.alpha * cfg.beta_omega * Dot(gs.flat(), g.flat()),
              1e-15);
  EXPECT_GT(est.omega.values[0], 1.0);
  // Theta' is one small step from Theta, so the update is close to
  // alpha * beta * |g|^2.
  EXPECT_NEAR(est.raw_delta[0], cfg.alpha * Dot(g.flat(), g.flat()),
              0.05 * cfg.alpha * Dot(g.flat(), g.flat()));
  BilevelConfig clamped;
  EXPECT_LE(EstimateOmega(t, f, y, f, y, clamped).omega.values[0], clamped.omega_max);
}

TEST(EstimateOmegaTest, AntiAlignedSinglePixelDownweights) {
  Rng rng(104);
  const FeatureMap f = ExtractFeatures(RandomImage(1, 1, 3, rng));
  const ModelParams t = RandomModel(2, 13, rng, 0.2);
  const auto est =
      EstimateOmega(t, f, LabelMap(1, 1, 1), f, LabelMap(1, 1, 0), BilevelConfig{});
  EXPECT_LT(est.raw_delta[0], 0.0);
  EXPECT_LT(est.omega.values[0], 1.0);
  EXPECT_GE(est.omega.values[0], 0.0);
}

TEST(EstimateOmegaTest, MatchesFiniteDifferencesOfStableLoss) {
  Rng rng(105);
  constexpr double kStep = 1e-4;
  double worst = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const FeatureMap fu = ExtractFeatures(RandomImage(6, 6, 3, rng));
    const FeatureMap fn = ExtractFeatures(RandomImage(6, 6, 3, rng));
    const LabelMap yu = RandomLabels(6, 6, 4, rng), yn = RandomLabels(6, 6, 4, rng);
    const ModelParams t = RandomModel(4, 13, rng);
    BilevelConfig cfg = RawConfig();
    cfg.alpha = 0.5;
    const auto est = EstimateOmega(t, fu, yu, fn, yn, cfg);
    std::vector<double> numeric(36);
    for (int l = 0; l < 36; ++l) {
      UncertaintyMap up = UncertaintyMap::Ones(6, 6), down = up;
      up.values[l] += kStep;
      down.values[l] -= kStep;
      numeric[l] = -cfg.beta_omega *
                   (StableLossAt(t, fu, yu, up, fn, yn, cfg.alpha) -
                    StableLossAt(t, fu, yu, down, fn, yn, cfg.alpha)) /
                   (2 * kStep);
    }
    worst = std::max(worst, RelativeError(est.raw_delta, numeric));
  }
  EXPECT_LE(worst, 1e-4);
}

TEST(EstimateOmegaTest, FactoredFormMatchesFlatInnerProduct) {
  Rng rng(106);
  for (int trial = 0; trial < 20; ++trial) {
    const FeatureMap fu = ExtractFeatures(RandomImage(5, 6, 3, rng));
    const FeatureMap fn = ExtractFeatures(RandomImage(5, 6, 3, rng));
    const LabelMap yu = RandomLabels(5, 6, 5, rng), yn = RandomLabels(5, 6, 5, rng);
    const ModelParams t = RandomModel(5, 13, rng);
    const BilevelConfig cfg = RawConfig();
    const auto est = EstimateOmega(t, fu, yu, fn, yn, cfg);
    const auto inner = InnerStep(t, fu, yu, UncertaintyMap::Ones(5, 6), cfg.alpha);
    const auto gs = LossAndGrad(inner, fn, yn, UncertaintyMap::Ones(5, 6)).grad;
    for (int l = 0; l < 30; ++l) {
      // Per-pixel gradient as a full parameter-shaped vector.
      UncertaintyMap only(5, 6, 0.0);
      only.values[l] = 30.0;  // undo the 1/N_valid normalization
      const auto gl = LossAndGrad(t, fu, yu, only).grad;
      const double want = cfg.beta_omega * cfg.alpha / 30.0 * Dot(gs.flat(), gl.flat());
      EXPECT_LE(RelativeError(est.raw_delta[l], want, 1e-300), 1e-10);
    }
  }
}

TEST(EstimateOmegaTest, NormalizedDeltaAndSignProperty) {
  Rng rng(107);
  for (int trial = 0; trial < 20; ++trial) {
    const FeatureMap fu = ExtractFeatures(RandomImage(4, 4, 3, rng));
    const FeatureMap fn = ExtractFeatures(RandomImage(4, 4, 3, rng));
    const LabelMap yu = RandomLabels(4, 4, 3, rng), yn = RandomLabels(4, 4, 3, rng);
    const ModelParams t = RandomModel(3, 13, rng);
    BilevelConfig cfg;
    cfg.beta_omega = 0.7;
    const auto est = EstimateOmega(t, fu, yu, fn, yn, cfg);
    const auto inner = InnerStep(t, fu, yu, UncertaintyMap::Ones(4, 4), cfg.alpha);
    const auto gs = LossAndGrad(inner, fn, yn, UncertaintyMap::Ones(4, 4)).grad;
    std::vector<Gradient> gl;
    double mean_norm = 0.0;
    for (int l = 0; l < 16; ++l) {
      UncertaintyMap only(4, 4, 0.0);
      only.values[l] = 16.0;
      gl.push_back(LossAndGrad(t, fu, yu, only).grad);
      mean_norm += Norm2(gl.back().flat()) / 16.0;
    }
    for (int l = 0; l < 16; ++l) {
      const double dot = Dot(gs.flat(), gl[l].flat());
      EXPECT_NEAR(est.delta[l], 0.7 * dot / (Norm2(gs.flat()) * mean_norm), 1e-10);
      const double cosine = CosineSimilarity(gs.flat(), gl[l].flat());
      if (cosine > 1e-9) {
        EXPECT_GT(est.omega.values[l], 1.0);
      }
      if (cosine < -1e-9) {
        EXPECT_LT(est.omega.values[l], 1.0);
      }
      EXPECT_GE(est.omega.values[l], 0.0);
      EXPECT_LE(est.omega.values[l], cfg.omega_max);
    }
  }
}

TEST(OuterStepTest, ZeroWeightsLeaveStudent) {
  Rng rng(108);
  const FeatureMap f = ExtractFeatures(RandomImage(4, 4, 3, rng));
  const ModelParams s = RandomModel(3, 13, rng);
  std::vector<WeightedSample> batch = {
      {&f, RandomLabels(4, 4, 3, rng), UncertaintyMap(4, 4, 0.0)}};
  EXPECT_EQ(OuterStep(s, batch, 0.5), s);
}

TEST(OuterStepTest, OnesEqualsVanillaStepAndMeanOfSamples) {
  Rng rng(109);
  const FeatureMap f1 = ExtractFeatures(RandomImage(4, 4, 3, rng));
  const FeatureMap f2 = ExtractFeatures(RandomImage(4, 4, 3, rng));
  const LabelMap y1 = RandomLabels(4, 4, 3, rng), y2 = RandomLabels(4, 4, 3, rng);
  const UncertaintyMap w2 = testing::RandomWeights(4, 4, rng);
  const ModelParams s = RandomModel(3, 13, rng);
  const auto ones = UncertaintyMap::Ones(4, 4);
  EXPECT_EQ(OuterStep(s, {{&f1, y1, ones}}, 0.5),
            SgdStep(s, LossAndGrad(s, f1, y1, ones).grad, 0.5));

  const auto g1 = LossAndGrad(s, f1, y1, ones).grad;
  const auto g2 = LossAndGrad(s, f2, y2, w2).grad;
  const ModelParams got = OuterStep(s, {{&f1, y1, ones}, {&f2, y2, w2}}, 0.5);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double want = s.flat()[i] - 0.5 * (g1.flat()[i] + g2.flat()[i]) / 2.0;
    EXPECT_NEAR(got.flat()[i], want, 1e-12);
  }
}

TEST(PolyLearningRateTest, Schedule) {
  EXPECT_DOUBLE_EQ(PolyLearningRate(0.5, 0, 100, 0.9), 0.5);
  EXPECT_NEAR(PolyLearningRate(0.5, 50, 100, 0.9), 0.5 * std::pow(0.5, 0.9), 1e-15);
  EXPECT_DOUBLE_EQ(PolyLearningRate(0.5, 30, 100, 0.0), 0.5);
}

TEST(BilevelConfigTest, Validation) {
  BilevelConfig c;
  EXPECT_NO_THROW(c.Validate());
  for (auto mutate : std::vector<void (*)(BilevelConfig&)>{
           [](BilevelConfig& b) { b.alpha = 0; },
           [](BilevelConfig& b) { b.omega_max = 0.5; },
           [](BilevelConfig& b) { b.ema_momentum = 1.0; },
           [](BilevelConfig& b) { b.batch_size = 0; },
           [](BilevelConfig& b) { b.eval_every = 0; },
           [](BilevelConfig& b) { b.iterations = -1; }}) {
    BilevelConfig bad;
    mutate(bad);
    EXPECT_THROW(bad.Validate(), ConfigError);
  }
}

// A tiny end-to-end world: 16x16 scenes, short pretraining and vanilla.
class TinyWorld : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    DomainSpec source = DefaultSourceSpec();
    source.height = source.width = 16;
    DomainSpec target = ShiftDomain(source, ShiftRecipe{});
    world_ = new World;
    world_->target = Dataset::FromSamples(GenerateDataset(target, 30, 5));
    world_->eval = Dataset::FromSamples(GenerateDataset(target, 8, 6));
    const Dataset src = Dataset::FromSamples(GenerateDataset(source, 30, 4));
    SgdConfig sgd;
    sgd.iterations = 200;
    sgd.lr = 4.0;
    world_->theta0 = PretrainSource(ZeroParams(6, 13), src, sgd).params;
    sgd.lr = 0.1;
    const auto van = VanillaSelfTrain(world_->theta0, world_->target, 20, sgd);
    world_->theta_tau = van.params;
    std::vector<LabelMap> labels;
    for (const auto& f : world_->target.features) {
      labels.push_back(PseudoLabel(van.params, f).labels);
    }
    world_->partition = PartitionSets(ScoreSnapshots(van.snapshots), 20.0, labels);
  }
  static void TearDownTestSuite() { delete world_; }

  static BilevelConfig Config(int iterations) {
    BilevelConfig c;
    c.iterations = iterations;
    c.eval_every = 5;
    c.style_window = 4;
    c.seed = 3;
    return c;
  }

  struct World {
    Dataset target, eval;
    ModelParams theta0, theta_tau;
    Partition partition;
  };
  static World* world_;
};

TinyWorld::World* TinyWorld::world_ = nullptr;

TEST_F(TinyWorld, ZeroIterationsReturnsStart) {
  const auto r = AdaptLoop(world_->theta_tau, world_->partition, world_->target,
                           world_->eval, Config(0), UnweightedFn());
  EXPECT_EQ(r.teacher, world_->theta_tau);
  ASSERT_EQ(r.metrics.size(), 1u);
  EXPECT_EQ(r.metrics[0].iteration, 0);
}

TEST_F(TinyWorld, SndIsDeterministic) {
  const BilevelConfig cfg = Config(12);
  SndWeigher w1(world_->target, world_->partition, cfg);
  SndWeigher w2(world_->target, world_->partition, cfg);
  auto fn = [](const SndWeigher& w) -> WeightFn {
    return [&w](const ModelParams& t, const std::vector<BatchItem>& b, int it) {
      return w(t, b, it);
    };
  };
  const auto a = AdaptLoop(world_->theta_tau, world_->partition, world_->target,
                           world_->eval, cfg, fn(w1));
  const auto b = AdaptLoop(world_->theta_tau, world_->partition, world_->target,
                           world_->eval, cfg, fn(w2));
  EXPECT_EQ(a.teacher, b.teacher);
  ASSERT_EQ(a.metrics.size(), b.metrics.size());
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    EXPECT_EQ(a.metrics[i].omega_correct, b.metrics[i].omega_correct);
  }
}

TEST_F(TinyWorld, RecordCadenceExactlyOnce) {
  std::vector<int> seen;
  const auto r = AdaptLoop(
      world_->theta_tau, world_->partition, world_->target, world_->eval,
      Config(17), UnweightedFn(),
      [&](const MetricsRecord& rec, const ModelParams&) { seen.push_back(rec.iteration); });
  EXPECT_EQ(seen, (std::vector<int>{0, 5, 10, 15, 17}));
  ASSERT_EQ(r.metrics.size(), seen.size());
}

TEST_F(TinyWorld, UnweightedOmegaIsOne) {
  const auto r = AdaptLoop(world_->theta_tau, world_->partition, world_->target,
                           world_->eval, Config(10), UnweightedFn());
  for (std::size_t i = 1; i < r.metrics.size(); ++i) {
    EXPECT_EQ(r.metrics[i].omega_min, 1.0);
    EXPECT_EQ(r.metrics[i].omega_max, 1.0);
  }
}

TEST_F(TinyWorld, ZeroMomentumTeacherTracksStudent) {
  BilevelConfig cfg = Config(6);
  cfg.ema_momentum = 0.0;
  const auto r = AdaptLoop(world_->theta_tau, world_->partition, world_->target,
                           world_->eval, cfg, EntropyWeightFn());
  EXPECT_EQ(r.teacher, r.student);
}

TEST_F(TinyWorld, EmptyUnstableSetIsConfigError) {
  Partition p = world_->partition;
  p.unstable.clear();
  EXPECT_THROW(AdaptLoop(world_->theta_tau, p, world_->target, world_->eval,
                         Config(3), UnweightedFn()),
               ConfigError);
}

TEST_F(TinyWorld, BadWeightsRejected) {
  const WeightFn negative = [](const ModelParams&, const std::vector<BatchItem>& b,
                               int) {
    std::vector<UncertaintyMap> out;
    for (const auto& item : b) {
      out.emplace_back(item.features->height, item.features->width, -0.5);
    }
    return out;
  };
  EXPECT_THROW(AdaptLoop(world_->theta_tau, world_->partition, world_->target,
                         world_->eval, Config(3), negative),
               InvalidInputError);
}

TEST_F(TinyWorld, NeighborIsStableAndCompensated) {
  const BilevelConfig cfg = Config(1);
  const SndWeigher weigher(world_->target, world_->partition, cfg);
  std::vector<int> stable;
  for (const auto& e : world_->partition.stable) stable.push_back(e.sample_id);
  for (int id : world_->partition.unstable) {
    const LabelMap pseudo =
        PseudoLabel(world_->theta_tau, world_->target.features[id]).labels;
    const int n = weigher.NeighborId(id, pseudo);
    EXPECT_TRUE(std::binary_search(stable.begin(), stable.end(), n));
    Rng rng(id);
    const auto neighbor = weigher.Neighbor(id, pseudo, rng);
    for (int c : MissingClasses(pseudo, neighbor.label)) {
      EXPECT_TRUE(world_->partition.per_class[c].empty());
    }
  }
}

}  // namespace
}  // namespace snd
