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


#include "snd/report.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "snd/errors.h"
#include "snd/segmenter.h"
#include "snd/vanilla.h"

namespace snd {

std::string FormatNumber(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", value);
  return buf;
}

std::string FormatMetricsRecord(const MetricsRecord& r) {
  std::ostringstream out;
  out << "iteration=" << r.iteration << " miou=" << FormatNumber(r.miou);
  for (std::size_t c = 0; c < r.per_class_iou.size(); ++c) {
    out << " iou_" << c << '='
        << (r.per_class_iou[c] ? FormatNumber(*r.per_class_iou[c]) : "na");
  }
  out << " omega_correct=" << FormatNumber(r.omega_correct)
      << " omega_incorrect=" << FormatNumber(r.omega_incorrect)
      << " correct_pixels=" << r.correct_pixels
      << " incorrect_pixels=" << r.incorrect_pixels
      << " omega_min=" << FormatNumber(r.omega_min)
      << " omega_max=" << FormatNumber(r.omega_max);
  return out.str();
}

std::map<std::string, std::string> ParseRecordLine(const std::string& line) {
  std::map<std::string, std::string> fields;
  std::istringstream tokens(line);
  std::string token;
  while (tokens >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw FormatError("metrics token without '=': " + token, 0);
    }
    fields[token.substr(0, eq)] = token.substr(eq + 1);
  }
  return fields;
}

std::vector<std::map<std::string, std::string>> ReadMetricsFile(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("missing metrics file " + path.string(), 0);
  std::vector<std::map<std::string, std::string>> records;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    auto fields = ParseRecordLine(line);
    if (!fields.count("iteration") || !fields.count("miou")) {
      throw FormatError("metrics record lacks iteration or miou", line_start);
    }
    records.push_back(std::move(fields));
  }
  return records;
}

void WriteCsv(const std::filesystem::path& path,
              const std::vector<std::string>& header,
              const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw InvalidInputError("cannot write " + path.string());
  auto write_row = [&out](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  };
  write_row(header);
  for (const auto& row : rows) write_row(row);
}

std::vector<GradientDirectionRow> GradientDirectionReport(
    const ModelParams& params, const Dataset& target, const Partition& partition,
    const BilevelConfig& config, int pairs, std::uint64_t seed) {
  const SndWeigher weigher(target, partition, config);
  const int available = static_cast<int>(partition.unstable.size());
  const int n = pairs == 0 ? available : std::min(pairs, available);
  std::vector<Gradient> gt_grad(target.size());
  std::vector<bool> have(target.size(), false);
  auto grad_of = [&](int id) -> const Gradient& {
    if (!have[id]) {
      const auto& f = target.features[id];
      gt_grad[id] = LossAndGrad(params, f, target.samples[id].gt_label,
                                UncertaintyMap::Ones(f.height, f.width))
                        .grad;
      have[id] = true;
    }
    return gt_grad[id];
  };
  Rng rng(MixSeed(seed, 0x6d));
  double matched = 0.0, random = 0.0;
  for (int i = 0; i < n; ++i) {
    const int u = partition.unstable[i];
    const LabelMap pseudo = PseudoLabel(params, target.features[u]).labels;
    const int neighbor = weigher.NeighborId(u, pseudo);
    const int other =
        partition.stable[rng.Index(static_cast<int>(partition.stable.size()))]
            .sample_id;
    matched += CosineSimilarity(grad_of(u).flat(), grad_of(neighbor).flat());
    random += CosineSimilarity(grad_of(u).flat(), grad_of(other).flat());
  }
  const double denom = n > 0 ? n : 1;
  return {{"matched", matched / denom, n}, {"random", random / denom, n}};
}

std::string RenderMethodTable(std::vector<MethodResult> results,
                              const std::string& task) {
  std::stable_sort(results.begin(), results.end(),
                   [](const auto& a, const auto& b) { return a.miou > b.miou; });
  const MethodResult* base = nullptr;
  for (const auto& r : results) {
    if (r.method == "unweighted") base = &r;
  }
  std::ostringstream out;
  out << std::left << std::setw(12) << "method" << std::right << std::setw(14)
      << task << std::setw(10) << "delta" << '\n';
  for (const auto& r : results) {
    out << std::left << std::setw(12) << r.method << std::right << std::fixed
        << std::setprecision(2) << std::setw(14) << 100.0 * r.miou;
    if (base != nullptr) {
      out << std::showpos << std::setw(10) << 100.0 * (r.miou - base->miou)
          << std::noshowpos;
    } else {
      out << std::setw(10) << "-";
    }
    out << '\n';
  }
  return out.str();
}

std::string RenderSweepTable(const std::vector<SweepResult>& results) {
  std::vector<std::string> params;
  for (const auto& r : results) {
    if (std::find(params.begin(), params.end(), r.parameter) == params.end()) {
      params.push_back(r.parameter);
    }
  }
  std::ostringstream out;
  for (const auto& p : params) {
    std::vector<SweepResult> row;
    for (const auto& r : results) {
      if (r.parameter == p) row.push_back(r);
    }
    std::sort(row.begin(), row.end(),
              [](const auto& a, const auto& b) { return a.value < b.value; });
    out << std::left << std::setw(10) << p;
    for (const auto& r : row) out << std::right << std::setw(10) << FormatNumber(r.value);
    out << '\n' << std::left << std::setw(10) << "mIoU";
    double lo = 1.0, hi = 0.0;
    for (const auto& r : row) {
      out << std::right << std::fixed << std::setprecision(2) << std::setw(10)
          << 100.0 * r.miou;
      lo = std::min(lo, r.miou);
      hi = std::max(hi, r.miou);
    }
    out << "   range " << std::fixed << std::setprecision(2)
        << 100.0 * (hi - lo) << "\n\n";
    out.unsetf(std::ios::fixed);
  }
  return out.str();
}

}  // namespace snd
