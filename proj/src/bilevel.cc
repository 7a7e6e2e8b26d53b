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

#include <algorithm>
#include <cmath>
#include <limits>

#include "snd/errors.h"
#include "snd/kernels.h"
#include "snd/metrics.h"
#include "snd/segmenter.h"

namespace snd {

void BilevelConfig::Validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(alpha > 0.0, "alpha must be positive");
  require(outer_lr > 0.0, "outer_lr must be positive");
  require(lr_power >= 0.0, "lr_power must be non-negative");
  require(beta_omega > 0.0, "beta_omega must be positive");
  require(omega_max >= 1.0, "omega_max must be at least 1");
  require(ema_momentum >= 0.0 && ema_momentum < 1.0,
          "ema_momentum must lie in [0, 1)");
  require(batch_size >= 1, "batch_size must be at least 1");
  require(iterations >= 0, "iterations must be non-negative");
  require(eval_every >= 1, "eval_every must be at least 1");
  require(style_window >= 1, "style_window must be at least 1");
  require(retrieval.style >= 0.0 && retrieval.layout >= 0.0,
          "retrieval weights must be non-negative");
}

ModelParams InnerStep(const ModelParams& teacher, const FeatureMap& features,
                      const LabelMap& pseudo, const UncertaintyMap& omega0,
                      double alpha) {
  const auto lg = LossAndGrad(teacher, features, pseudo, omega0);
  return SgdStep(teacher, lg.grad, alpha);
}

OmegaEstimate EstimateOmega(const ModelParams& teacher,
                            const FeatureMap& unstable_features,
                            const LabelMap& unstable_pseudo,
                            const FeatureMap& neighbor_features,
                            const LabelMap& neighbor_label,
                            const BilevelConfig& config) {
  const int h = unstable_features.height;
  const int w = unstable_features.width;
  const int n = h * w;
  const ModelParams inner = InnerStep(teacher, unstable_features,
                                      unstable_pseudo,
                                      UncertaintyMap::Ones(h, w), config.alpha);
  const Gradient g_stable =
      LossAndGrad(inner, neighbor_features, neighbor_label,
                  UncertaintyMap::Ones(neighbor_features.height,
                                       neighbor_features.width))
          .grad;
  const ProbMap probs = Forward(teacher, unstable_features);

  std::vector<double> products(n), norms(n);
  kernels::omp::MetaInnerProducts(g_stable, probs, unstable_pseudo,
                                  unstable_features, products, norms);

  OmegaEstimate est;
  est.omega = UncertaintyMap(h, w);
  est.raw_delta.resize(n);
  est.delta.resize(n);
  const double raw_scale = config.beta_omega * config.alpha / n;
  for (int l = 0; l < n; ++l) est.raw_delta[l] = raw_scale * products[l];

  if (config.normalize_meta) {
    double mean_norm = 0.0;
    for (double v : norms) mean_norm += v;
    mean_norm /= n;
    const double denom = Norm2(g_stable.flat()) * mean_norm;
    for (int l = 0; l < n; ++l) {
      est.delta[l] = denom > 0.0 ? config.beta_omega * products[l] / denom : 0.0;
    }
  } else {
    est.delta = est.raw_delta;
  }
  for (int l = 0; l < n; ++l) {
    if (!std::isfinite(est.delta[l])) throw NumericError("omega diverged");
    est.omega.values[l] = std::clamp(1.0 + est.delta[l], 0.0, config.omega_max);
  }
  return est;
}

ModelParams OuterStep(const ModelParams& student,
                      const std::vector<WeightedSample>& batch, double lr) {
  if (batch.empty()) throw InvalidInputError("outer step on an empty batch");
  Gradient total(student.classes(), student.dim());
  for (const auto& s : batch) {
    const auto lg = LossAndGrad(student, *s.features, s.labels, s.omega);
    if (!std::isfinite(lg.loss)) throw NumericError("outer loss diverged");
    auto t = total.flat();
    auto g = lg.grad.flat();
    for (std::size_t i = 0; i < t.size(); ++i) t[i] += g[i];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double& v : total.flat()) v *= inv;
  return SgdStep(student, total, lr);
}

double PolyLearningRate(double lr0, int iteration, int total, double power) {
  if (total <= 0) return lr0;
  const double frac = 1.0 - static_cast<double>(iteration) / total;
  return lr0 * std::pow(std::max(frac, 0.0), power);
}

SndWeigher::SndWeigher(const Dataset& target, const Partition& partition,
                       const BilevelConfig& config)
    : target_(target), partition_(partition), config_(config) {
  if (partition.stable.empty()) throw ConfigError("stable set is empty");
  style_.resize(target.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < target.size(); ++i) {
    style_[i] = StyleProxy(target.samples[i].image, config.style_window);
  }
  stable_slot_.assign(target.size(), -1);
  for (std::size_t s = 0; s < partition.stable.size(); ++s) {
    const StableEntry& e = partition.stable[s];
    index_.push_back(
        {e.sample_id,
         {style_[e.sample_id], LayoutProxy(e.label, target.num_classes)}});
    stable_slot_[e.sample_id] = static_cast<int>(s);
  }
}

int SndWeigher::NeighborId(int sample_id, const LabelMap& pseudo) const {
  const ProxyPair query{style_[sample_id],
                        LayoutProxy(pseudo, target_.num_classes)};
  return NeighborQuery(query, index_, config_.retrieval);
}

CompensatedNeighbor SndWeigher::Neighbor(int sample_id, const LabelMap& pseudo,
                                         Rng& rng) const {
  const int neighbor = NeighborId(sample_id, pseudo);
  const StableEntry& entry = partition_.stable[stable_slot_[neighbor]];
  return Compensate(
      target_.samples[neighbor].image, entry.label, pseudo, partition_,
      [this](int id) -> const ImageTensor& { return target_.samples[id].image; },
      rng);
}

std::vector<UncertaintyMap> SndWeigher::operator()(
    const ModelParams& teacher, const std::vector<BatchItem>& batch,
    int iteration) const {
  std::vector<UncertaintyMap> out(batch.size());
  const std::uint64_t iteration_seed = MixSeed(config_.seed, 0xC0000 + iteration);
#pragma omp parallel for schedule(static)
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const BatchItem& item = batch[b];
    Rng rng(MixSeed(iteration_seed, static_cast<std::uint64_t>(item.sample_id)));
    const CompensatedNeighbor neighbor =
        Neighbor(item.sample_id, item.pseudo.labels, rng);
    const FeatureMap neighbor_features = ExtractFeatures(neighbor.image);
    out[b] = EstimateOmega(teacher, *item.features, item.pseudo.labels,
                           neighbor_features, neighbor.label, config_)
                 .omega;
  }
  return out;
}

namespace {

struct OmegaTally {
  double correct_sum = 0.0;
  double incorrect_sum = 0.0;
  std::int64_t correct = 0;
  std::int64_t incorrect = 0;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();

  void Add(const UncertaintyMap& omega, const LabelMap& pseudo,
           const LabelMap& truth) {
    for (std::size_t l = 0; l < omega.values.size(); ++l) {
      const double v = omega.values[l];
      min = std::min(min, v);
      max = std::max(max, v);
      if (pseudo.data[l] == truth.data[l]) {
        correct_sum += v;
        ++correct;
      } else {
        incorrect_sum += v;
        ++incorrect;
      }
    }
  }
};

MetricsRecord MakeRecord(int iteration, const ModelParams& teacher,
                         const Dataset& eval, const OmegaTally& tally) {
  MetricsRecord r;
  r.iteration = iteration;
  const IouReport iou = EvaluateMiou(teacher, eval);
  r.per_class_iou = iou.per_class;
  r.miou = iou.miou;
  r.correct_pixels = tally.correct;
  r.incorrect_pixels = tally.incorrect;
  r.omega_correct = tally.correct ? tally.correct_sum / tally.correct : 0.0;
  r.omega_incorrect =
      tally.incorrect ? tally.incorrect_sum / tally.incorrect : 0.0;
  const bool any = tally.correct + tally.incorrect > 0;
  r.omega_min = any ? tally.min : 0.0;
  r.omega_max = any ? tally.max : 0.0;
  return r;
}

void CheckOmega(const UncertaintyMap& omega, const FeatureMap& features) {
  if (omega.height != features.height || omega.width != features.width ||
      omega.values.size() != static_cast<std::size_t>(features.pixels())) {
    throw InvalidInputError("weight map shape mismatch");
  }
  for (double v : omega.values) {
    if (!std::isfinite(v)) throw NumericError("non-finite pixel weight");
    if (v < 0.0) throw InvalidInputError("negative pixel weight");
  }
}

}  // namespace

AdaptResult AdaptLoop(const ModelParams& params, const Partition& partition,
                      const Dataset& target, const Dataset& eval,
                      const BilevelConfig& config, const WeightFn& weights,
                      const RecordFn& on_record) {
  config.Validate();
  if (partition.unstable.empty()) throw ConfigError("unstable set is empty");
  AdaptResult result{params, params, {}};
  OmegaTally tally;
  auto emit = [&](int iteration) {
    result.metrics.push_back(MakeRecord(iteration, result.teacher, eval, tally));
    if (on_record) on_record(result.metrics.back(), result.teacher);
    tally = OmegaTally();
  };
  emit(0);

  EpochSampler sampler(partition.unstable, MixSeed(config.seed, 0xA0));
  for (int it = 0; it < config.iterations; ++it) {
    const std::vector<int> ids = sampler.NextBatch(config.batch_size);
    std::vector<BatchItem> items(ids.size());
    for (std::size_t b = 0; b < ids.size(); ++b) {
      items[b].sample_id = ids[b];
      items[b].image = &target.samples[ids[b]].image;
      items[b].features = &target.features[ids[b]];
      items[b].pseudo = PseudoLabel(result.teacher, target.features[ids[b]]);
    }
    std::vector<UncertaintyMap> omegas = weights(result.teacher, items, it);
    if (omegas.size() != items.size()) {
      throw InvalidInputError("weight function returned a wrong batch size");
    }
    std::vector<WeightedSample> batch(items.size());
    for (std::size_t b = 0; b < items.size(); ++b) {
      CheckOmega(omegas[b], *items[b].features);
      tally.Add(omegas[b], items[b].pseudo.labels,
                target.samples[ids[b]].gt_label);
      batch[b] = {items[b].features, items[b].pseudo.labels,
                  std::move(omegas[b])};
    }
    const double lr = PolyLearningRate(config.outer_lr, it, config.iterations,
                                       config.lr_power);
    result.student = OuterStep(result.student, batch, lr);
    result.teacher =
        EmaUpdate(result.teacher, result.student, config.ema_momentum);

    const int done = it + 1;
    if (done % config.eval_every == 0 || done == config.iterations) {
      emit(done);
    }
  }
  return result;
}

}  // namespace snd
