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


#include "snd/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "snd/errors.h"

namespace snd {

namespace {

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T ParseNumber(std::string_view text, std::string_view key) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("bad value '" + std::string(text) + "' for " +
                      std::string(key));
  }
  return value;
}

bool ParseBool(std::string_view text, std::string_view key) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  throw ConfigError("bad boolean '" + std::string(text) + "' for " +
                    std::string(key));
}

std::vector<double> ParseList(std::string_view text, std::string_view key) {
  std::vector<double> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(ParseNumber<double>(Trim(text.substr(0, comma)), key));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ConfigError("empty list for " + std::string(key));
  return out;
}

std::string FormatDouble(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

std::string FormatList(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += FormatDouble(values[i]);
  }
  return out;
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Key NumberKey(std::string name, T RunConfig::*field) {
  return {name,
          [field, name](RunConfig& c, std::string_view v) {
            c.*field = ParseNumber<T>(v, name);
          },
          [field](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return FormatDouble(c.*field);
            } else {
              return std::to_string(c.*field);
            }
          }};
}

// Keys that live in nested structs.
template <typename T, typename Get>
Key NestedKey(std::string name, Get access) {
  return {name,
          [access, name](RunConfig& c, std::string_view v) {
            access(c) = ParseNumber<T>(v, name);
          },
          [access](const RunConfig& c) {
            const T value = access(const_cast<RunConfig&>(c));
            if constexpr (std::is_floating_point_v<T>) {
              return FormatDouble(value);
            } else {
              return std::to_string(value);
            }
          }};
}

const std::vector<Key>& Keys() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    k.push_back({"seed",
                 [](RunConfig& c, std::string_view v) {
                   c.seed = ParseNumber<std::uint64_t>(v, "seed");
                 },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    k.push_back({"out_dir",
                 [](RunConfig& c, std::string_view v) { c.out_dir = v; },
                 [](const RunConfig& c) { return c.out_dir.string(); }});
    k.push_back({"data_dir",
                 [](RunConfig& c, std::string_view v) { c.data_dir = v; },
                 [](const RunConfig& c) { return c.data_dir.string(); }});
    k.push_back({"method",
                 [](RunConfig& c, std::string_view v) {
                   c.method = ParseMethod(v);
                 },
                 [](const RunConfig& c) { return MethodName(c.method); }});
    k.push_back(NumberKey("image_size", &RunConfig::image_size));
    k.push_back(NumberKey("source_count", &RunConfig::source_count));
    k.push_back(NumberKey("source_val_count", &RunConfig::source_val_count));
    k.push_back(NumberKey("target_count", &RunConfig::target_count));
    k.push_back(NumberKey("target_val_count", &RunConfig::target_val_count));
    k.push_back(NestedKey<double>("shift_hue_degrees", [](RunConfig& c) -> double& {
      return c.shift.hue_rotation_degrees;
    }));
    k.push_back(NestedKey<double>("shift_hue_jitter_degrees",
                                  [](RunConfig& c) -> double& {
                                    return c.shift.hue_jitter_degrees;
                                  }));
    k.push_back(NestedKey<double>("shift_illumination",
                                  [](RunConfig& c) -> double& {
                                    return c.shift.illumination_amplitude;
                                  }));
    k.push_back(NestedKey<double>("shift_vertical_offset",
                                  [](RunConfig& c) -> double& {
                                    return c.shift.vertical_offset;
                                  }));
    k.push_back(NestedKey<double>("shift_horizontal_offset",
                                  [](RunConfig& c) -> double& {
                                    return c.shift.horizontal_offset;
                                  }));
    k.push_back(NestedKey<double>("shift_rare_frequency_scale",
                                  [](RunConfig& c) -> double& {
                                    return c.shift.rare_frequency_scale;
                                  }));
    k.push_back(NumberKey("pretrain_iterations", &RunConfig::pretrain_iterations));
    k.push_back(NumberKey("pretrain_lr", &RunConfig::pretrain_lr));
    k.push_back(NumberKey("batch_size", &RunConfig::batch_size));
    k.push_back(NumberKey("vanilla_tau", &RunConfig::vanilla_tau));
    k.push_back(NumberKey("vanilla_lr", &RunConfig::vanilla_lr));
    k.push_back(NumberKey("k_percent", &RunConfig::k_percent));
    k.push_back(NestedKey<double>("alpha", [](RunConfig& c) -> double& {
      return c.bilevel.alpha;
    }));
    k.push_back(NestedKey<double>("outer_lr", [](RunConfig& c) -> double& {
      return c.bilevel.outer_lr;
    }));
    k.push_back(NestedKey<double>("lr_power", [](RunConfig& c) -> double& {
      return c.bilevel.lr_power;
    }));
    k.push_back(NestedKey<double>("beta_omega", [](RunConfig& c) -> double& {
      return c.bilevel.beta_omega;
    }));
    k.push_back({"normalize_meta",
                 [](RunConfig& c, std::string_view v) {
                   c.bilevel.normalize_meta = ParseBool(v, "normalize_meta");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.bilevel.normalize_meta ? "1" : "0");
                 }});
    k.push_back(NestedKey<double>("omega_max", [](RunConfig& c) -> double& {
      return c.bilevel.omega_max;
    }));
    k.push_back(NestedKey<double>("ema_momentum", [](RunConfig& c) -> double& {
      return c.bilevel.ema_momentum;
    }));
    k.push_back(NestedKey<int>("adapt_iterations", [](RunConfig& c) -> int& {
      return c.bilevel.iterations;
    }));
    k.push_back(NestedKey<int>("eval_every", [](RunConfig& c) -> int& {
      return c.bilevel.eval_every;
    }));
    k.push_back(NestedKey<int>("style_window", [](RunConfig& c) -> int& {
      return c.bilevel.style_window;
    }));
    k.push_back(NestedKey<double>("style_weight", [](RunConfig& c) -> double& {
      return c.bilevel.retrieval.style;
    }));
    k.push_back(NestedKey<double>("layout_weight", [](RunConfig& c) -> double& {
      return c.bilevel.retrieval.layout;
    }));
    k.push_back(NumberKey("probe_count", &RunConfig::probe_count));
    k.push_back(NumberKey("gradient_pairs", &RunConfig::gradient_pairs));
    k.push_back({"sweep_k",
                 [](RunConfig& c, std::string_view v) {
                   c.sweep_k = ParseList(v, "sweep_k");
                 },
                 [](const RunConfig& c) { return FormatList(c.sweep_k); }});
    k.push_back({"sweep_tau_fraction",
                 [](RunConfig& c, std::string_view v) {
                   c.sweep_tau_fraction = ParseList(v, "sweep_tau_fraction");
                 },
                 [](const RunConfig& c) {
                   return FormatList(c.sweep_tau_fraction);
                 }});
    return k;
  }();
  return keys;
}

}  // namespace

std::string MethodName(Method method) {
  switch (method) {
    case Method::kSnd:
      return "snd";
    case Method::kUnweighted:
      return "unweighted";
    case Method::kEntropy:
      return "pe";
    case Method::kPrototype:
      return "pd";
  }
  return "snd";
}

Method ParseMethod(std::string_view name) {
  if (name == "snd") return Method::kSnd;
  if (name == "unweighted") return Method::kUnweighted;
  if (name == "pe") return Method::kEntropy;
  if (name == "pd") return Method::kPrototype;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

void RunConfig::Validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(image_size >= 8, "image_size must be at least 8");
  require(source_count > 0 && source_val_count > 0 && target_count > 0 &&
              target_val_count > 0,
          "dataset sizes must be positive");
  require(pretrain_iterations >= 0, "pretrain_iterations must be >= 0");
  require(pretrain_lr > 0.0, "pretrain_lr must be positive");
  require(batch_size >= 1, "batch_size must be at least 1");
  require(vanilla_tau >= 0, "vanilla_tau must be >= 0");
  require(vanilla_lr > 0.0, "vanilla_lr must be positive");
  require(k_percent > 0.0 && k_percent <= 100.0,
          "k_percent must lie in (0, 100]");
  require(probe_count >= 0, "probe_count must be >= 0");
  require(gradient_pairs >= 0, "gradient_pairs must be non-negative");
  require(bilevel.style_window <= image_size,
          "style_window must not exceed image_size");
  for (double k : sweep_k) {
    require(k > 0.0 && k <= 100.0, "sweep_k entries must lie in (0, 100]");
  }
  for (double f : sweep_tau_fraction) {
    require(f >= 0.0, "sweep_tau_fraction entries must be >= 0");
  }
  bilevel.Validate();
}

SgdConfig RunConfig::PretrainSgd() const {
  return {pretrain_iterations, pretrain_lr, batch_size, seed};
}

SgdConfig RunConfig::VanillaSgd() const {
  return {vanilla_tau, vanilla_lr, batch_size, seed};
}

DomainSpec RunConfig::SourceSpec() const {
  DomainSpec spec = DefaultSourceSpec();
  spec.height = image_size;
  spec.width = image_size;
  return spec;
}

DomainSpec RunConfig::TargetSpec() const {
  return ShiftDomain(SourceSpec(), shift);
}

std::filesystem::path RunConfig::DataDir() const {
  return data_dir.empty() ? out_dir / "data" : data_dir;
}

RunConfig ParseConfig(std::string_view text, RunConfig base) {
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto newline = text.find('\n');
    std::string_view line = text.substr(0, newline);
    text.remove_prefix(newline == std::string_view::npos ? text.size()
                                                         : newline + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) {
      throw ConfigError(where + "expected key = value");
    }
    const std::string_view key = Trim(line.substr(0, eq));
    const std::string_view value = Trim(line.substr(eq + 1));
    const auto& keys = Keys();
    const auto it = std::find_if(keys.begin(), keys.end(),
                                 [&](const Key& k) { return k.name == key; });
    if (it == keys.end()) {
      throw ConfigError(where + "unknown key '" + std::string(key) + "'");
    }
    try {
      it->set(base, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return base;
}

RunConfig LoadConfig(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  return ParseConfig(text.str(), std::move(base));
}

std::string FormatConfig(const RunConfig& config) {
  std::string out;
  for (const auto& key : Keys()) {
    out += key.name + " = " + key.get(config) + "\n";
  }
  return out;
}

}  // namespace snd
