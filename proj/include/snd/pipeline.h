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


// File-backed experiment stages. Each stage reads its inputs from and writes
// its outputs under the run directory, so stages can run as separate
// processes or back to back:
//
//   <data_dir>/{source,source_val,target,target_val}/   samples + manifest
//   models/source.sndm, models/vanilla.sndm             Theta^0, Theta^tau
//   snapshots/snap_NNNNN.sndp                            stability snapshots
//   partition.txt                                        stable/unstable split
//   runs/<method>/{teacher.sndm,metrics.txt,...}         adaptation outputs
//   reports/                                             csv tables
//   report.txt                                           summary tables

#ifndef SND_PIPELINE_H_
#define SND_PIPELINE_H_

#include <filesystem>
#include <string>
#include <vector>

#include "snd/bilevel.h"
#include "snd/config.h"
#include "snd/dataset.h"
#include "snd/metrics.h"
#include "snd/report.h"

namespace snd {

enum class Split { kSource, kSourceVal, kTarget, kTargetVal };

std::filesystem::path SplitDir(const RunConfig& config, Split split);
std::filesystem::path RunDir(const RunConfig& config, Method method);
Dataset LoadSplit(const RunConfig& config, Split split);

// Generates the four splits unless their manifests already exist. Returns
// the number of newly written samples.
int StageGenData(const RunConfig& config);

// Pretrains on the source split and checks held-out source mIoU.
IouReport StagePretrain(const RunConfig& config);

// Vanilla self-training from the source model; writes Theta^tau and the
// snapshots.
void StageVanilla(const RunConfig& config);

struct PartitionSummary {
  int stable = 0;
  int unstable = 0;
  double spearman = 0.0;  // es vs per-sample pixel accuracy under Theta^tau
};

// Scores the snapshots and writes the partition manifest plus the
// es / accuracy scatter table.
PartitionSummary StagePartition(const RunConfig& config);

// Adapts from Theta^tau with `method`; writes teacher, metrics stream,
// curve table, timing and probe dumps.
AdaptResult StageAdapt(const RunConfig& config, Method method);

// Evaluates runs/<method>/teacher.sndm on the target validation split.
IouReport StageEval(const RunConfig& config, Method method);

// Writes reports/gradient_direction.csv.
std::vector<GradientDirectionRow> StageGradientReport(const RunConfig& config);

// Renders report.txt from every runs/*/metrics.txt and sweep results
// present. Throws FormatError when no metrics file exists.
std::string StageReport(const RunConfig& config);

// One-at-a-time sweep over config.sweep_k (at full tau) and
// config.sweep_tau_fraction (at config.k_percent) with SND. Each setting
// runs under sweep/<name>/ sharing the data and source model.
std::vector<SweepResult> StageSweep(const RunConfig& config);

// Name of the stage most recently entered, for error messages.
const std::string& CurrentStage();

// gen-data through eval for every method in `methods`, then report.
std::string RunExperiment(const RunConfig& config,
                          const std::vector<Method>& methods);

}  // namespace snd

#endif  // SND_PIPELINE_H_
