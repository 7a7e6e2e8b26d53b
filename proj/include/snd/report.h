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


// Metrics streams, tables and the gradient-direction report.

#ifndef SND_REPORT_H_
#define SND_REPORT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "snd/bilevel.h"
#include "snd/dataset.h"
#include "snd/metrics.h"
#include "snd/params.h"
#include "snd/stability.h"

namespace snd {

// One line of name=value pairs separated by single spaces.
std::string FormatMetricsRecord(const MetricsRecord& record);

// Parses any name=value line into an ordered map. Throws FormatError on a
// token without '='.
std::map<std::string, std::string> ParseRecordLine(const std::string& line);

// All records of a metrics file, in order. Throws FormatError when the file
// is missing or a line lacks `iteration` or `miou`.
std::vector<std::map<std::string, std::string>> ReadMetricsFile(
    const std::filesystem::path& path);

// Simple CSV writer: header row, then rows, comma separated.
void WriteCsv(const std::filesystem::path& path,
              const std::vector<std::string>& header,
              const std::vector<std::vector<std::string>>& rows);

std::string FormatNumber(double value);

struct GradientDirectionRow {
  std::string group;
  double mean_cosine = 0.0;
  int count = 0;
};

// Cosine between whole-sample gradients (ground-truth labels, `params`) of
// each unstable sample and (a) its retrieved stable neighbor, (b) a
// uniformly drawn stable sample. Uses the first `pairs` unstable samples,
// or all of them when `pairs` is 0.
std::vector<GradientDirectionRow> GradientDirectionReport(
    const ModelParams& params, const Dataset& target, const Partition& partition,
    const BilevelConfig& config, int pairs, std::uint64_t seed);

// Method rows sorted by mIoU (descending) with delta against the
// unweighted row when present.
struct MethodResult {
  std::string method;
  double miou = 0.0;
};
std::string RenderMethodTable(std::vector<MethodResult> results,
                              const std::string& task);

// One row per swept parameter, one column per value.
struct SweepResult {
  std::string parameter;
  double value = 0.0;
  double miou = 0.0;
};
std::string RenderSweepTable(const std::vector<SweepResult>& results);

}  // namespace snd

#endif  // SND_REPORT_H_
