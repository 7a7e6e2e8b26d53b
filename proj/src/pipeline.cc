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


#include "snd/pipeline.h"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "snd/baselines.h"
#include "snd/errors.h"
#include "snd/segmenter.h"
#include "snd/stability.h"
#include "snd/synth.h"
#include "snd/vanilla.h"

namespace snd {

namespace fs = std::filesystem;

namespace {

// Source pretraining must clear this on held-out source samples.
constexpr double kSourceMiouFloor = 0.80;

std::string& StageName() {
  static std::string name = "config";
  return name;
}

void EnterStage(const std::string& name) {
  StageName() = name;
  spdlog::info("stage {}", name);
}

fs::path ModelsDir(const RunConfig& c) { return c.out_dir / "models"; }
fs::path SourceModel(const RunConfig& c) { return ModelsDir(c) / "source.sndm"; }
fs::path VanillaModel(const RunConfig& c) {
  return ModelsDir(c) / "vanilla.sndm";
}
fs::path SnapshotDir(const RunConfig& c) { return c.out_dir / "snapshots"; }
fs::path PartitionFile(const RunConfig& c) { return c.out_dir / "partition.txt"; }
fs::path ReportsDir(const RunConfig& c) { return c.out_dir / "reports"; }

void WriteText(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InvalidInputError("cannot write " + path.string());
  out << text;
}

std::string IouLines(const IouReport& report) {
  std::ostringstream out;
  out << "miou=" << FormatNumber(report.miou) << '\n';
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    out << "iou_" << c << '='
        << (report.per_class[c] ? FormatNumber(*report.per_class[c]) : "na")
        << '\n';
  }
  return out.str();
}

std::vector<LabelMap> LabelsUnder(const ModelParams& params,
                                  const Dataset& data) {
  std::vector<LabelMap> labels(data.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < data.size(); ++i) {
    labels[i] = ArgmaxLabels(Forward(params, data.features[i]));
  }
  return labels;
}

Partition LoadPartition(const RunConfig& config, const Dataset& target) {
  const ModelParams theta_tau = ReadCheckpoint(VanillaModel(config));
  return ReadPartitionManifest(PartitionFile(config),
                               LabelsUnder(theta_tau, target),
                               target.num_classes);
}

BilevelConfig AdaptConfig(const RunConfig& config) {
  BilevelConfig b = config.bilevel;
  b.seed = config.seed;
  return b;
}

std::string GridText(const UncertaintyMap& map) {
  std::ostringstream out;
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      if (x) out << ' ';
      out << FormatNumber(map.values[static_cast<std::size_t>(y) * map.width + x]);
    }
    out << '\n';
  }
  return out.str();
}

std::string Padded(int value) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", value);
  return buf;
}

}  // namespace

const std::string& CurrentStage() { return StageName(); }

fs::path SplitDir(const RunConfig& config, Split split) {
  switch (split) {
    case Split::kSource:
      return config.DataDir() / "source";
    case Split::kSourceVal:
      return config.DataDir() / "source_val";
    case Split::kTarget:
      return config.DataDir() / "target";
    case Split::kTargetVal:
      return config.DataDir() / "target_val";
  }
  return config.DataDir();
}

fs::path RunDir(const RunConfig& config, Method method) {
  return config.out_dir / "runs" / MethodName(method);
}

Dataset LoadSplit(const RunConfig& config, Split split) {
  return Dataset::FromSamples(ReadDataset(SplitDir(config, split)));
}

int StageGenData(const RunConfig& config) {
  EnterStage("gen-data");
  config.Validate();
  struct Job {
    Split split;
    bool target;
    int count;
    std::uint64_t stream;
  };
  const Job jobs[] = {{Split::kSource, false, config.source_count, 1},
                      {Split::kSourceVal, false, config.source_val_count, 2},
                      {Split::kTarget, true, config.target_count, 3},
                      {Split::kTargetVal, true, config.target_val_count, 4}};
  int written = 0;
  for (const Job& job : jobs) {
    const fs::path dir = SplitDir(config, job.split);
    if (fs::exists(dir / "manifest.txt")) continue;
    const DomainSpec spec = job.target ? config.TargetSpec() : config.SourceSpec();
    written += WriteDataset(
        GenerateDataset(spec, job.count, MixSeed(config.seed, job.stream)), dir);
  }
  return written;
}

IouReport StagePretrain(const RunConfig& config) {
  EnterStage("pretrain");
  config.Validate();
  const Dataset source = LoadSplit(config, Split::kSource);
  const ModelParams init =
      ZeroParams(source.num_classes, FeatureDim(source.samples[0].image.channels));
  const TrainResult trained = PretrainSource(init, source, config.PretrainSgd());
  fs::create_directories(ModelsDir(config));
  WriteCheckpoint(SourceModel(config), trained.params);

  fs::create_directories(ReportsDir(config));
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < trained.loss_history.size(); ++i) {
    rows.push_back({std::to_string(i), FormatNumber(trained.loss_history[i])});
  }
  WriteCsv(ReportsDir(config) / "pretrain_loss.csv", {"iteration", "loss"}, rows);

  const IouReport report =
      EvaluateMiou(ReadCheckpoint(SourceModel(config)),
                   LoadSplit(config, Split::kSourceVal));
  WriteText(ReportsDir(config) / "pretrain.txt", IouLines(report));
  if (report.miou < kSourceMiouFloor) {
    spdlog::warn("source mIoU {:.4f} is below {:.2f}", report.miou,
                 kSourceMiouFloor);
  }
  return report;
}

void StageVanilla(const RunConfig& config) {
  EnterStage("vanilla");
  config.Validate();
  const ModelParams source_model = ReadCheckpoint(SourceModel(config));
  const Dataset target = LoadSplit(config, Split::kTarget);
  const VanillaResult result = VanillaSelfTrain(
      source_model, target, config.vanilla_tau, config.VanillaSgd());
  WriteCheckpoint(VanillaModel(config), result.params);
  fs::remove_all(SnapshotDir(config));
  WriteSnapshots(result.snapshots, SnapshotDir(config));

  const Dataset target_val = LoadSplit(config, Split::kTargetVal);
  std::ostringstream text;
  text << "tau=" << config.vanilla_tau << '\n'
       << "target_miou_initial="
       << FormatNumber(EvaluateMiou(source_model, target_val).miou) << '\n'
       << "target_miou_vanilla="
       << FormatNumber(
              EvaluateMiou(ReadCheckpoint(VanillaModel(config)), target_val).miou)
       << '\n';
  WriteText(ReportsDir(config) / "vanilla.txt", text.str());
}

PartitionSummary StagePartition(const RunConfig& config) {
  EnterStage("partition");
  config.Validate();
  const Dataset target = LoadSplit(config, Split::kTarget);
  const SnapshotStore store = ReadSnapshots(SnapshotDir(config));
  std::vector<int> ids(target.size());
  for (int i = 0; i < target.size(); ++i) ids[i] = i;
  if (!store.CompleteFor(ids)) {
    throw FormatError("snapshots missing for some target samples", 0);
  }
  const std::vector<StabilityRecord> records = ScoreSnapshots(store);
  const ModelParams theta_tau = ReadCheckpoint(VanillaModel(config));
  const std::vector<LabelMap> labels = LabelsUnder(theta_tau, target);
  const Partition partition = PartitionSets(records, config.k_percent, labels);
  WritePartitionManifest(PartitionFile(config), records, partition);

  std::vector<double> es, accuracy;
  std::vector<std::vector<std::string>> rows;
  std::vector<bool> stable(target.size(), false);
  for (const auto& e : partition.stable) stable[e.sample_id] = true;
  for (const auto& r : records) {
    const double acc =
        PixelAccuracy(labels[r.sample_id], target.samples[r.sample_id].gt_label);
    es.push_back(r.es);
    accuracy.push_back(acc);
    rows.push_back({std::to_string(r.sample_id), FormatNumber(r.es),
                    FormatNumber(acc), stable[r.sample_id] ? "SE" : "UE"});
  }
  fs::create_directories(ReportsDir(config));
  WriteCsv(ReportsDir(config) / "stability.csv",
           {"id", "es", "pixel_accuracy", "set"}, rows);
  PartitionSummary summary;
  summary.stable = static_cast<int>(partition.stable.size());
  summary.unstable = static_cast<int>(partition.unstable.size());
  summary.spearman = SpearmanCorrelation(es, accuracy);
  WriteText(ReportsDir(config) / "stability.txt",
            "stable=" + std::to_string(summary.stable) +
                "\nunstable=" + std::to_string(summary.unstable) +
                "\nspearman=" + FormatNumber(summary.spearman) + "\n");
  return summary;
}

AdaptResult StageAdapt(const RunConfig& config, Method method) {
  EnterStage("adapt");
  config.Validate();
  const Dataset target = LoadSplit(config, Split::kTarget);
  const Dataset target_val = LoadSplit(config, Split::kTargetVal);
  const ModelParams theta_tau = ReadCheckpoint(VanillaModel(config));
  const Partition partition = LoadPartition(config, target);
  const BilevelConfig bilevel = AdaptConfig(config);

  WeightFn weights;
  std::unique_ptr<SndWeigher> weigher;
  switch (method) {
    case Method::kSnd:
      weigher = std::make_unique<SndWeigher>(target, partition, bilevel);
      weights = [w = weigher.get()](const ModelParams& teacher,
                                    const std::vector<BatchItem>& batch,
                                    int iteration) {
        return (*w)(teacher, batch, iteration);
      };
      break;
    case Method::kUnweighted:
      weights = UnweightedFn();
      break;
    case Method::kEntropy:
      weights = EntropyWeightFn();
      break;
    case Method::kPrototype:
      weights = PrototypeWeightFn(target.num_classes);
      break;
  }

  const fs::path run_dir = RunDir(config, method);
  fs::remove_all(run_dir);
  fs::create_directories(run_dir / "checkpoints");
  std::ofstream metrics(run_dir / "metrics.txt");
  if (!metrics) throw InvalidInputError("cannot write metrics stream");

  std::vector<int> probes;
  for (int i = 0; i < config.probe_count &&
                  i < static_cast<int>(partition.unstable.size());
       ++i) {
    probes.push_back(partition.unstable[i]);
  }
  const RecordFn on_record = [&](const MetricsRecord& record,
                                 const ModelParams& teacher) {
    metrics << FormatMetricsRecord(record) << '\n';
    metrics.flush();
    const std::string tag = Padded(record.iteration);
    WriteCheckpoint(run_dir / "checkpoints" / ("teacher_" + tag + ".sndm"),
                    teacher);
    if (probes.empty()) return;
    std::vector<BatchItem> items(probes.size());
    for (std::size_t b = 0; b < probes.size(); ++b) {
      items[b].sample_id = probes[b];
      items[b].image = &target.samples[probes[b]].image;
      items[b].features = &target.features[probes[b]];
      items[b].pseudo = PseudoLabel(teacher, target.features[probes[b]]);
    }
    const auto maps = weights(teacher, items, record.iteration);
    for (std::size_t b = 0; b < probes.size(); ++b) {
      WriteText(run_dir / "checkpoints" /
                    ("omega_" + tag + "_" + std::to_string(probes[b]) + ".txt"),
                GridText(maps[b]));
    }
  };

  const std::uint64_t checksum = partition.LabelChecksum();
  const auto start = std::chrono::steady_clock::now();
  AdaptResult result =
      AdaptLoop(theta_tau, partition, target, target_val, bilevel, weights,
                on_record);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  if (partition.LabelChecksum() != checksum) {
    throw std::logic_error("frozen stable labels changed during adaptation");
  }

  WriteCheckpoint(run_dir / "teacher.sndm", result.teacher);
  std::vector<std::vector<std::string>> curve;
  for (const auto& r : result.metrics) {
    curve.push_back({std::to_string(r.iteration), FormatNumber(r.miou)});
  }
  WriteCsv(run_dir / "curve.csv", {"iteration", "miou"}, curve);
  WriteText(run_dir / "timing.txt",
            "wall_seconds=" + FormatNumber(seconds) + "\n");
  WriteText(run_dir / "labels.txt",
            "label_checksum=" + std::to_string(checksum) + "\n");
  return result;
}

IouReport StageEval(const RunConfig& config, Method method) {
  EnterStage("eval");
  const fs::path run_dir = RunDir(config, method);
  const IouReport report = EvaluateMiou(ReadCheckpoint(run_dir / "teacher.sndm"),
                                        LoadSplit(config, Split::kTargetVal));
  WriteText(run_dir / "eval.txt", IouLines(report));
  std::vector<std::vector<std::string>> rows;
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    rows.push_back({std::to_string(c), report.per_class[c]
                                           ? FormatNumber(*report.per_class[c])
                                           : "na"});
  }
  WriteCsv(run_dir / "iou.csv", {"class", "iou"}, rows);
  return report;
}

std::vector<GradientDirectionRow> StageGradientReport(const RunConfig& config) {
  EnterStage("gradient-report");
  const Dataset target = LoadSplit(config, Split::kTarget);
  const ModelParams theta_tau = ReadCheckpoint(VanillaModel(config));
  const Partition partition = LoadPartition(config, target);
  const auto rows =
      GradientDirectionReport(theta_tau, target, partition, AdaptConfig(config),
                              config.gradient_pairs, config.seed);
  std::vector<std::vector<std::string>> table;
  for (const auto& r : rows) {
    table.push_back({r.group, FormatNumber(r.mean_cosine), std::to_string(r.count)});
  }
  fs::create_directories(ReportsDir(config));
  WriteCsv(ReportsDir(config) / "gradient_direction.csv",
           {"group", "mean_cosine", "count"}, table);
  return rows;
}

std::string StageReport(const RunConfig& config) {
  EnterStage("report");
  std::vector<MethodResult> results;
  const fs::path runs = config.out_dir / "runs";
  if (fs::exists(runs)) {
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(runs)) {
      if (entry.is_directory()) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& dir : dirs) {
      const auto records = ReadMetricsFile(dir / "metrics.txt");
      if (records.empty()) {
        throw FormatError("empty metrics stream in " + dir.string(), 0);
      }
      results.push_back(
          {dir.filename().string(), std::stod(records.back().at("miou"))});
    }
  }
  if (results.empty()) {
    throw FormatError("no metrics files under " + runs.string(), 0);
  }
  std::string text = "mIoU (%) on the target validation split\n\n" +
                     RenderMethodTable(results, "source->target");
  const fs::path sweep_csv = config.out_dir / "sweep" / "sweep.csv";
  if (fs::exists(sweep_csv)) {
    std::ifstream in(sweep_csv);
    std::string line;
    std::getline(in, line);  // header
    std::vector<SweepResult> sweep;
    while (std::getline(in, line)) {
      std::istringstream fields(line);
      std::string parameter, value, miou;
      std::getline(fields, parameter, ',');
      std::getline(fields, value, ',');
      std::getline(fields, miou, ',');
      sweep.push_back({parameter, std::stod(value), std::stod(miou)});
    }
    text += "\nSensitivity (SND)\n\n" + RenderSweepTable(sweep);
  }
  WriteText(config.out_dir / "report.txt", text);
  return text;
}

std::vector<SweepResult> StageSweep(const RunConfig& config) {
  config.Validate();
  const fs::path root = config.out_dir / "sweep";
  fs::create_directories(root);
  std::map<std::pair<double, int>, double> done;
  std::map<int, fs::path> vanilla_runs;

  auto run_setting = [&](double k, int tau) {
    const auto key = std::make_pair(k, tau);
    if (auto it = done.find(key); it != done.end()) return it->second;
    RunConfig sub = config;
    sub.k_percent = k;
    sub.vanilla_tau = tau;
    sub.data_dir = config.DataDir();
    std::ostringstream name;
    name << "k" << FormatNumber(k) << "_tau" << tau;
    sub.out_dir = root / name.str();
    fs::create_directories(ModelsDir(sub));
    fs::copy_file(SourceModel(config), SourceModel(sub),
                  fs::copy_options::overwrite_existing);
    if (auto it = vanilla_runs.find(tau); it != vanilla_runs.end()) {
      RunConfig prev = sub;
      prev.out_dir = it->second;
      fs::copy_file(VanillaModel(prev), VanillaModel(sub),
                    fs::copy_options::overwrite_existing);
      fs::remove_all(SnapshotDir(sub));
      fs::copy(SnapshotDir(prev), SnapshotDir(sub), fs::copy_options::recursive);
    } else {
      StageVanilla(sub);
      vanilla_runs[tau] = sub.out_dir;
    }
    StagePartition(sub);
    const AdaptResult result = StageAdapt(sub, Method::kSnd);
    EnterStage("sweep");
    done[key] = result.metrics.back().miou;
    return done[key];
  };

  EnterStage("sweep");
  std::vector<SweepResult> results;
  for (double k : config.sweep_k) {
    results.push_back({"k", k, run_setting(k, config.vanilla_tau)});
  }
  for (double f : config.sweep_tau_fraction) {
    const int tau = static_cast<int>(std::lround(f * config.vanilla_tau));
    results.push_back({"tau", f, run_setting(config.k_percent, tau)});
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : results) {
    rows.push_back({r.parameter, FormatNumber(r.value), FormatNumber(r.miou)});
  }
  WriteCsv(root / "sweep.csv", {"parameter", "value", "miou"}, rows);
  WriteText(root / "sweep.txt", RenderSweepTable(results));
  return results;
}

std::string RunExperiment(const RunConfig& config,
                          const std::vector<Method>& methods) {
  config.Validate();
  StageGenData(config);
  StagePretrain(config);
  StageVanilla(config);
  StagePartition(config);
  StageGradientReport(config);
  for (Method m : methods) {
    StageAdapt(config, m);
    StageEval(config, m);
  }
  return StageReport(config);
}

}  // namespace snd
