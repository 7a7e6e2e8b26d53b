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


// Bi-level pixel reweighting with a teacher-student pair.
//
// For an unstable sample with teacher pseudo-label y_hat, one simulated SGD
// step on its omega-weighted loss gives
//   Theta'(omega) = Theta_tea - alpha * sum_l omega_l g_l / N_u,
// where g_l = (p_l - e_{y_hat_l}) x [phi_l; 1]. The stable neighbor's loss
// L_s(Theta'(omega)) then has
//   -dL_s/domega_l = (alpha / N_u) <g_s, g_l>,  g_s = grad L_s(Theta'(1)),
// and since g_l is rank one, <g_s, g_l> = (p_l - e_y)^T G [phi_l; 1] with G
// the reshaped g_s.

#ifndef SND_BILEVEL_H_
#define SND_BILEVEL_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "snd/compensation.h"
#include "snd/dataset.h"
#include "snd/params.h"
#include "snd/retrieval.h"
#include "snd/stability.h"
#include "snd/tensor.h"
#include "snd/vanilla.h"

namespace snd {

struct BilevelConfig {
  double alpha = 0.01;         // inner step size
  double outer_lr = 0.2;       // student step size at iteration 0
  double lr_power = 0.9;       // poly decay exponent
  double beta_omega = 1.0;     // omega step size
  bool normalize_meta = true;  // divide by |g_s| * mean_l |g_l|
  double omega_max = 2.0;
  double ema_momentum = 0.99;
  int batch_size = 4;
  int iterations = 2000;
  int eval_every = 200;
  int style_window = 8;
  RetrievalWeights retrieval;
  std::uint64_t seed = 0;

  // Throws ConfigError on out-of-range fields.
  void Validate() const;
};

// Theta_tea - alpha * grad of the omega0-weighted loss.
ModelParams InnerStep(const ModelParams& teacher, const FeatureMap& features,
                      const LabelMap& pseudo, const UncertaintyMap& omega0,
                      double alpha);

struct OmegaEstimate {
  UncertaintyMap omega;            // clamp(1 + delta, 0, omega_max)
  std::vector<double> raw_delta;   // beta_omega * (alpha / N_u) <g_s, g_l>
  std::vector<double> delta;       // the update actually applied
};

// Per-pixel omega for one unstable sample from its own stable neighbor.
OmegaEstimate EstimateOmega(const ModelParams& teacher,
                            const FeatureMap& unstable_features,
                            const LabelMap& unstable_pseudo,
                            const FeatureMap& neighbor_features,
                            const LabelMap& neighbor_label,
                            const BilevelConfig& config);

struct WeightedSample {
  const FeatureMap* features = nullptr;
  LabelMap labels;
  UncertaintyMap omega;
};

// One SGD step on the mean of per-sample omega-weighted gradients.
ModelParams OuterStep(const ModelParams& student,
                      const std::vector<WeightedSample>& batch, double lr);

// Poly schedule lr0 * (1 - it / total)^power.
double PolyLearningRate(double lr0, int iteration, int total, double power);

struct BatchItem {
  int sample_id = 0;
  const ImageTensor* image = nullptr;
  const FeatureMap* features = nullptr;
  PseudoLabels pseudo;  // teacher prediction
};

// Produces one omega map per batch item. The only component that differs
// between the adaptation methods.
using WeightFn = std::function<std::vector<UncertaintyMap>(
    const ModelParams& teacher, const std::vector<BatchItem>& batch,
    int iteration)>;

// Retrieval, compensation and meta-gradient omega estimation.
class SndWeigher {
 public:
  SndWeigher(const Dataset& target, const Partition& partition,
             const BilevelConfig& config);

  std::vector<UncertaintyMap> operator()(const ModelParams& teacher,
                                         const std::vector<BatchItem>& batch,
                                         int iteration) const;

  // Id of the nearest stable sample to `sample_id` labeled `pseudo`.
  int NeighborId(int sample_id, const LabelMap& pseudo) const;
  // That neighbor with its frozen label, compensated.
  CompensatedNeighbor Neighbor(int sample_id, const LabelMap& pseudo,
                               Rng& rng) const;

 private:
  const Dataset& target_;
  const Partition& partition_;
  BilevelConfig config_;
  std::vector<std::vector<double>> style_;  // per target sample
  std::vector<IndexEntry> index_;           // stable samples, frozen labels
  std::vector<int> stable_slot_;            // sample id -> partition.stable
};

struct MetricsRecord {
  int iteration = 0;
  std::vector<std::optional<double>> per_class_iou;
  double miou = 0.0;
  // Mean omega since the previous record, split by pseudo-label correctness.
  double omega_correct = 0.0;
  double omega_incorrect = 0.0;
  std::int64_t correct_pixels = 0;
  std::int64_t incorrect_pixels = 0;
  double omega_min = 0.0;
  double omega_max = 0.0;
};

struct AdaptResult {
  ModelParams teacher;
  ModelParams student;
  std::vector<MetricsRecord> metrics;
};

// Called after every record with the teacher at that iteration.
using RecordFn =
    std::function<void(const MetricsRecord&, const ModelParams& teacher)>;

// Teacher and student start at `params`. Each iteration draws a batch of
// unstable samples, pseudo-labels them with the teacher, weights them with
// `weights`, steps the student and EMA-updates the teacher. A record is
// emitted every eval_every iterations and at the end, evaluated on `eval`.
// Throws ConfigError on an empty unstable set.
AdaptResult AdaptLoop(const ModelParams& params, const Partition& partition,
                      const Dataset& target, const Dataset& eval,
                      const BilevelConfig& config, const WeightFn& weights,
                      const RecordFn& on_record = {});

}  // namespace snd

#endif  // SND_BILEVEL_H_
