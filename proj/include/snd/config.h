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


// Run configuration: flat `key = value` lines, `#` starts a comment.

#ifndef SND_CONFIG_H_
#define SND_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "snd/bilevel.h"
#include "snd/synth.h"
#include "snd/vanilla.h"

namespace snd {

enum class Method { kSnd, kUnweighted, kEntropy, kPrototype };

std::string MethodName(Method method);
// Throws ConfigError for unknown names.
Method ParseMethod(std::string_view name);

struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "snd_out";
  std::filesystem::path data_dir;  // empty: <out_dir>/data
  Method method = Method::kSnd;

  // Data.
  int image_size = 48;
  int source_count = 300;
  int source_val_count = 60;
  int target_count = 300;
  int target_val_count = 100;
  ShiftRecipe shift;

  // Source pretraining.
  int pretrain_iterations = 1500;
  double pretrain_lr = 8.0;
  int batch_size = 4;

  // Vanilla self-training and partition.
  int vanilla_tau = 1000;
  double vanilla_lr = 0.05;
  double k_percent = 5.0;

  // Adaptation.
  BilevelConfig bilevel;
  int probe_count = 2;  // unstable samples whose omega maps are dumped

  // Reports and sweeps.
  int gradient_pairs = 0;  // 0: every unstable sample
  std::vector<double> sweep_k = {2.5, 5.0, 10.0};
  std::vector<double> sweep_tau_fraction = {0.25, 0.5, 1.0};

  // Throws ConfigError on out-of-range values.
  void Validate() const;
  SgdConfig PretrainSgd() const;
  SgdConfig VanillaSgd() const;
  DomainSpec SourceSpec() const;
  DomainSpec TargetSpec() const;
  std::filesystem::path DataDir() const;
};

// Applies `key = value` lines on top of `base`. Throws ConfigError naming
// the line for unknown keys, missing '=' or unparsable values.
RunConfig ParseConfig(std::string_view text, RunConfig base = {});
RunConfig LoadConfig(const std::filesystem::path& path, RunConfig base = {});

// Every key with its current value, one per line, parseable by ParseConfig.
std::string FormatConfig(const RunConfig& config);

}  // namespace snd

#endif  // SND_CONFIG_H_
