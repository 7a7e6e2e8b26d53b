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


// Command-line driver for the SND experiment stages.

#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "snd/config.h"
#include "snd/errors.h"
#include "snd/pipeline.h"

namespace {

enum ExitCode {
  kOk = 0,
  kOtherError = 1,
  kConfigError = 2,
  kFormatError = 3,
  kNumericError = 4,
};

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string method;
  bool all_methods = false;
  bool verbose = false;
};

snd::RunConfig ResolveConfig(const GlobalFlags& flags) {
  snd::RunConfig config;
  if (!flags.config_path.empty()) config = snd::LoadConfig(flags.config_path);
  if (flags.seed) config.seed = *flags.seed;
  if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
  if (!flags.method.empty()) config.method = snd::ParseMethod(flags.method);
  config.Validate();
  return config;
}

void PrintIou(const snd::IouReport& report) {
  std::cout << "miou=" << snd::FormatNumber(report.miou) << '\n';
}

int Dispatch(const std::string& command, const GlobalFlags& flags) {
  const snd::RunConfig config = ResolveConfig(flags);
  if (command == "gen-data") {
    std::cout << "samples_written=" << snd::StageGenData(config) << '\n';
  } else if (command == "pretrain") {
    PrintIou(snd::StagePretrain(config));
  } else if (command == "vanilla") {
    snd::StageVanilla(config);
  } else if (command == "partition") {
    const auto summary = snd::StagePartition(config);
    snd::StageGradientReport(config);
    std::cout << "stable=" << summary.stable << " unstable=" << summary.unstable
              << " spearman=" << snd::FormatNumber(summary.spearman) << '\n';
  } else if (command == "adapt") {
    const auto result = snd::StageAdapt(config, config.method);
    std::cout << "miou=" << snd::FormatNumber(result.metrics.back().miou)
              << '\n';
  } else if (command == "eval") {
    PrintIou(snd::StageEval(config, config.method));
  } else if (command == "report") {
    std::cout << snd::StageReport(config);
  } else if (command == "sweep") {
    for (const auto& r : snd::StageSweep(config)) {
      std::cout << r.parameter << '=' << snd::FormatNumber(r.value)
                << " miou=" << snd::FormatNumber(r.miou) << '\n';
    }
  } else if (command == "run") {
    std::vector<snd::Method> methods = {config.method};
    if (flags.all_methods) {
      methods = {snd::Method::kSnd, snd::Method::kUnweighted,
                 snd::Method::kEntropy, snd::Method::kPrototype};
    }
    std::cout << snd::RunExperiment(config, methods);
  }
  return kOk;
}

int Fail(int code, const std::string& what) {
  std::cerr << "stage " << snd::CurrentStage() << " failed: " << what << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stable neighbor denoising on a synthetic segmentation benchmark"};
  app.require_subcommand(1);
  GlobalFlags flags;
  app.add_option("--config", flags.config_path, "key = value config file")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", flags.seed, "run seed");
  app.add_option("--out", flags.out_dir, "output directory");
  app.add_option("--method", flags.method, "adaptation method")
      ->check(CLI::IsMember({"snd", "unweighted", "pe", "pd"}));
  app.add_flag("-v,--verbose", flags.verbose, "debug logging");

  const std::pair<const char*, const char*> commands[] = {
      {"gen-data", "generate source and target splits"},
      {"pretrain", "train the source model"},
      {"vanilla", "self-train on the target and record snapshots"},
      {"partition", "score stability and split stable/unstable"},
      {"adapt", "bilevel adaptation with the selected method"},
      {"eval", "evaluate the adapted teacher"},
      {"report", "render summary tables"},
      {"sweep", "k and tau sensitivity sweep"},
      {"run", "every stage end to end"},
  };
  std::string chosen;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    if (std::string(name) == "run") {
      sub->add_flag("--all-methods", flags.all_methods,
                    "adapt with snd, unweighted, pe and pd");
    }
    sub->callback([&chosen, name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  spdlog::set_level(flags.verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    return Dispatch(chosen, flags);
  } catch (const snd::ConfigError& e) {
    return Fail(kConfigError, e.what());
  } catch (const snd::FormatError& e) {
    return Fail(kFormatError, e.what());
  } catch (const snd::NumericError& e) {
    return Fail(kNumericError, e.what());
  } catch (const std::exception& e) {
    return Fail(kOtherError, e.what());
  }
}
