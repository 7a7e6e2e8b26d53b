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

#include "snd/synth.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "snd/binary_io.h"
#include "snd/errors.h"

namespace snd {

namespace {

constexpr std::string_view kSampleMagic = "SNDS";
constexpr std::uint16_t kSampleVersion = 1;
constexpr int kMaxObjects = 4;

// Independent random streams per scene. Layout never touches the style
// stream, which is what makes style shifts label-preserving.
constexpr std::uint64_t kLayoutStream = 0x1a;
constexpr std::uint64_t kStyleStream = 0x5e;

struct IlluminationDraw {
  double amplitude;
  double angle;
  double phase;
};

IlluminationDraw DrawIllumination(const DomainSpec& spec, Rng& style_rng) {
  IlluminationDraw d;
  d.amplitude = spec.illumination_amplitude * style_rng.Uniform(0.2, 1.0);
  d.angle = style_rng.Uniform(0.0, std::numbers::pi);
  d.phase = style_rng.Uniform(0.0, 2.0 * std::numbers::pi);
  return d;
}

double IlluminationAt(const DomainSpec& spec, const IlluminationDraw& d, int y,
                      int x) {
  const double t = std::cos(d.angle) * y / spec.height +
                   std::sin(d.angle) * x / spec.width;
  return 1.0 + d.amplitude * std::sin(2.0 * std::numbers::pi *
                                          spec.illumination_frequency * t +
                                      d.phase);
}

Rng StyleRng(const DomainSpec& spec, std::uint64_t seed) {
  return Rng(MixSeed(MixSeed(seed, kStyleStream), spec.style_seed));
}

double Gaussian(Rng& rng, double mean, double spread, double lo, double hi) {
  return std::clamp(rng.Normal(mean, spread), lo, hi);
}

// Horizontal band edge with a gentle wave, in rows.
std::vector<int> BandEdge(const DomainSpec& spec, const ClassLayout& layout,
                          double lo, double hi, Rng& rng) {
  const double base = Gaussian(rng, layout.v_mean, layout.v_spread, lo, hi) *
                      spec.height;
  const double amp = rng.Uniform(0.0, 2.0);
  const double cycles = rng.Uniform(0.5, 2.0);
  const double phase = rng.Uniform(0.0, 2.0 * std::numbers::pi);
  std::vector<int> edge(spec.width);
  for (int x = 0; x < spec.width; ++x) {
    edge[x] = static_cast<int>(std::lround(
        base + amp * std::sin(2.0 * std::numbers::pi * cycles * x / spec.width +
                              phase)));
  }
  return edge;
}

struct ObjectDraw {
  int cls;
  double cy, cx;  // pixels
  double a, b;    // shape half-extents
};

bool Covers(const ObjectDraw& o, int y, int x) {
  const double dy = y + 0.5 - o.cy;
  const double dx = x + 0.5 - o.cx;
  switch (o.cls) {
    case kDisc:
      return dx * dx + dy * dy <= o.a * o.a;
    case kRectangle:
      return std::abs(dx) <= o.a && std::abs(dy) <= o.b;
    case kTriangle: {
      // Upright isosceles: apex at cy - b, base at cy + b, half-base a.
      if (dy < -o.b || dy > o.b) return false;
      const double half_width = o.a * (dy + o.b) / (2.0 * o.b);
      return std::abs(dx) <= half_width;
    }
    default:
      return false;
  }
}

}  // namespace

void DomainSpec::Validate() const {
  const int c = num_classes();
  if (c < 1) throw InvalidInputError("domain spec has no classes");
  if (static_cast<int>(layout.size()) != c ||
      static_cast<int>(class_frequencies.size()) != c) {
    throw InvalidInputError("domain spec per-class arrays disagree in length");
  }
  for (double f : class_frequencies) {
    if (!(f >= 0.0 && f <= 1.0)) {
      throw InvalidInputError("class frequency outside [0, 1]");
    }
  }
  if (class_frequencies[kBackground] != 1.0) {
    throw InvalidInputError("background class must always be present");
  }
  if (!(noise_sigma >= 0.0) || !(instance_jitter >= 0.0) ||
      !(hue_jitter_degrees >= 0.0)) {
    throw InvalidInputError("noise parameters must be non-negative");
  }
  if (height < 8 || width < 8) throw InvalidInputError("scene too small");
}

DomainSpec DefaultSourceSpec() {
  DomainSpec spec;
  spec.tag = "source";
  spec.style_seed = 11;
  spec.palette = {
      {0.50, 0.42, 0.32},  // background
      {0.55, 0.72, 0.92},  // sky
      {0.32, 0.32, 0.36},  // road
      {0.85, 0.22, 0.20},  // disc
      {0.20, 0.62, 0.30},  // rectangle
      {0.92, 0.78, 0.18},  // triangle
  };
  spec.layout = {
      {0.50, 0.00, 0.50, 0.00},
      {0.22, 0.05, 0.50, 0.00},
      {0.76, 0.05, 0.50, 0.00},
      {0.45, 0.10, 0.35, 0.15},
      {0.50, 0.10, 0.62, 0.15},
      {0.55, 0.08, 0.50, 0.18},
  };
  spec.class_frequencies = {1.0, 0.9, 0.9, 0.7, 0.7, 0.4};
  return spec;
}

Rgb RotateHue(const Rgb& color, double degrees) {
  // Rodrigues rotation about the unit gray axis k = (1,1,1)/sqrt(3).
  const double t = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(t);
  const double s = std::sin(t);
  const double k = 1.0 / std::sqrt(3.0);
  const double kv = k * (color[0] + color[1] + color[2]);
  const Rgb cross = {k * (color[2] - color[1]), k * (color[0] - color[2]),
                     k * (color[1] - color[0])};
  Rgb out;
  for (int i = 0; i < 3; ++i) {
    out[i] = std::clamp(color[i] * c + cross[i] * s + k * kv * (1.0 - c), 0.0,
                        1.0);
  }
  return out;
}

DomainSpec ShiftDomain(const DomainSpec& source, const ShiftRecipe& recipe,
                       const std::string& tag) {
  DomainSpec target = source;
  target.tag = tag;
  target.style_seed = source.style_seed + 1;
  for (auto& color : target.palette) {
    color = RotateHue(color, recipe.hue_rotation_degrees);
  }
  target.illumination_amplitude = recipe.illumination_amplitude;
  target.hue_jitter_degrees = recipe.hue_jitter_degrees;
  for (int c = kDisc; c < target.num_classes(); ++c) {
    target.layout[c].v_mean += recipe.vertical_offset;
    target.layout[c].h_mean += recipe.horizontal_offset;
  }
  target.class_frequencies[recipe.rare_class] *= recipe.rare_frequency_scale;
  return target;
}

DomainSpec DefaultTargetSpec() {
  return ShiftDomain(DefaultSourceSpec(), ShiftRecipe{});
}

Grid2D IlluminationField(const DomainSpec& spec, std::uint64_t seed) {
  Rng style_rng = StyleRng(spec, seed);
  const IlluminationDraw draw = DrawIllumination(spec, style_rng);
  Grid2D field(spec.height, spec.width);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      field.at(y, x) = IlluminationAt(spec, draw, y, x);
    }
  }
  return field;
}

Sample GenerateScene(const DomainSpec& spec, std::uint64_t seed) {
  spec.Validate();
  const int h = spec.height;
  const int w = spec.width;
  Rng layout_rng(MixSeed(seed, kLayoutStream));
  Rng style_rng = StyleRng(spec, seed);
  const IlluminationDraw illum = DrawIllumination(spec, style_rng);
  std::vector<Rgb> palette = spec.palette;
  if (spec.hue_jitter_degrees > 0.0) {
    const double turn = Gaussian(style_rng, 0.0, spec.hue_jitter_degrees,
                                 -3.0 * spec.hue_jitter_degrees,
                                 3.0 * spec.hue_jitter_degrees);
    for (auto& color : palette) color = RotateHue(color, turn);
  }

  Sample sample;
  sample.domain_tag = spec.tag;
  sample.num_classes = spec.num_classes();
  sample.gt_label = LabelMap(h, w, kBackground);
  LabelMap& label = sample.gt_label;

  // Bands. The sky edge stays in the upper half and the road edge in the
  // lower half so background rows always survive between them.
  if (spec.num_classes() > kSky &&
      layout_rng.Uniform() < spec.class_frequencies[kSky]) {
    const auto edge = BandEdge(spec, spec.layout[kSky], 0.08, 0.40, layout_rng);
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < std::min(edge[x], h); ++y) label.at(y, x) = kSky;
    }
  }
  if (spec.num_classes() > kRoad &&
      layout_rng.Uniform() < spec.class_frequencies[kRoad]) {
    const auto edge = BandEdge(spec, spec.layout[kRoad], 0.60, 0.92, layout_rng);
    for (int x = 0; x < w; ++x) {
      for (int y = std::max(edge[x], 0); y < h; ++y) label.at(y, x) = kRoad;
    }
  }

  // Objects.
  std::vector<ObjectDraw> objects;
  for (int c = kDisc; c < spec.num_classes() && c <= kTriangle; ++c) {
    if (!(layout_rng.Uniform() < spec.class_frequencies[c])) continue;
    const int instances = layout_rng.Uniform() < 0.3 ? 2 : 1;
    for (int i = 0; i < instances; ++i) {
      const ClassLayout& lay = spec.layout[c];
      ObjectDraw o;
      o.cls = c;
      o.cy = Gaussian(layout_rng, lay.v_mean, lay.v_spread, 0.1, 0.9) * h;
      o.cx = Gaussian(layout_rng, lay.h_mean, lay.h_spread, 0.1, 0.9) * w;
      o.a = layout_rng.Uniform(3.5, 7.0);
      o.b = layout_rng.Uniform(3.5, 7.0);
      objects.push_back(o);
    }
  }
  // Over budget: drop from the front so the later (rarer) classes survive.
  if (static_cast<int>(objects.size()) > kMaxObjects) {
    objects.erase(objects.begin(), objects.end() - kMaxObjects);
  }
  std::vector<Rgb> jitter(objects.size());
  for (auto& j : jitter) {
    for (double& v : j) v = style_rng.Normal(0.0, spec.instance_jitter);
  }
  // Region map: -1 for bands/background, else object index. Later objects
  // are drawn on top.
  std::vector<int> region(static_cast<std::size_t>(h) * w, -1);
  for (int i = 0; i < static_cast<int>(objects.size()); ++i) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (Covers(objects[i], y, x)) {
          label.at(y, x) = static_cast<std::uint16_t>(objects[i].cls);
          region[static_cast<std::size_t>(y) * w + x] = i;
        }
      }
    }
  }
  // Keep the background invariant even if bands and objects covered it.
  if (!label.Contains(kBackground)) {
    label.at(h / 2, 0) = kBackground;
    region[static_cast<std::size_t>(h / 2) * w] = -1;
  }

  sample.image = ImageTensor(h, w, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int cls = label.at(y, x);
      const int r = region[static_cast<std::size_t>(y) * w + x];
      const double gain = IlluminationAt(spec, illum, y, x);
      for (int ch = 0; ch < 3; ++ch) {
        double v = palette[cls][ch];
        if (r >= 0) v += jitter[r][ch];
        v *= gain;
        if (spec.noise_sigma > 0.0) v += style_rng.Normal(0.0, spec.noise_sigma);
        sample.image.at(y, x, ch) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return sample;
}

std::vector<Sample> GenerateDataset(const DomainSpec& spec, int count,
                                    std::uint64_t base_seed) {
  std::vector<Sample> samples(count);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    samples[i] = GenerateScene(spec, MixSeed(base_seed, i));
    samples[i].id = i;
  }
  return samples;
}

std::string EncodeSample(const Sample& sample) {
  ByteWriter w;
  w.Magic(kSampleMagic);
  w.U16(kSampleVersion);
  w.U16(static_cast<std::uint16_t>(sample.image.height));
  w.U16(static_cast<std::uint16_t>(sample.image.width));
  w.U16(static_cast<std::uint16_t>(sample.image.channels));
  w.U16(static_cast<std::uint16_t>(sample.num_classes));
  for (float v : sample.image.data) w.F32(v);
  for (std::uint16_t v : sample.gt_label.data) w.U16(v);
  w.U16(static_cast<std::uint16_t>(sample.domain_tag.size()));
  w.Bytes(sample.domain_tag);
  return w.Take();
}

Sample DecodeSample(std::string_view bytes, int id) {
  ByteReader r(bytes);
  r.ExpectMagic(kSampleMagic);
  const std::size_t version_at = r.offset();
  if (r.U16("version") != kSampleVersion) {
    throw FormatError("unsupported sample version", version_at);
  }
  const int h = r.U16("height");
  const int w = r.U16("width");
  const int c = r.U16("channels");
  const std::size_t classes_at = r.offset();
  const int classes = r.U16("classes");
  if (h == 0 || w == 0 || c == 0 || classes == 0) {
    throw FormatError("zero dimension in sample header", classes_at);
  }
  Sample s;
  s.id = id;
  s.num_classes = classes;
  s.image = ImageTensor(h, w, c);
  for (float& v : s.image.data) v = r.F32("image");
  s.gt_label = LabelMap(h, w);
  for (auto& v : s.gt_label.data) {
    const std::size_t at = r.offset();
    v = r.U16("label");
    if (v >= classes) throw FormatError("label value out of range", at);
  }
  const int len = r.U16("tag length");
  s.domain_tag = std::string(r.Bytes(len, "tag"));
  r.ExpectEnd();
  return s;
}

namespace {

std::string SampleFileName(int id) {
  std::ostringstream name;
  name << "sample_" << std::setw(5) << std::setfill('0') << id << ".snds";
  return name.str();
}

}  // namespace

int WriteDataset(const std::vector<Sample>& samples,
                 const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ostringstream manifest;
  for (const Sample& s : samples) {
    WriteFileBytes(dir / SampleFileName(s.id), EncodeSample(s));
    manifest << s.id << ' ' << SampleFileName(s.id) << ' ' << s.domain_tag
             << '\n';
  }
  WriteFileBytes(dir / "manifest.txt", manifest.str());
  return static_cast<int>(samples.size());
}

Sample ReadSample(const std::filesystem::path& dir, int id) {
  return DecodeSample(ReadFileBytes(dir / SampleFileName(id)), id);
}

std::vector<Sample> ReadDataset(const std::filesystem::path& dir) {
  const std::string text = ReadFileBytes(dir / "manifest.txt");
  std::istringstream in(text);
  std::vector<Sample> samples;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    int id;
    std::string file, tag;
    if (!(fields >> id >> file >> tag)) {
      throw FormatError("malformed manifest line in " + dir.string(), offset);
    }
    samples.push_back(DecodeSample(ReadFileBytes(dir / file), id));
    offset += line.size() + 1;
  }
  return samples;
}

}  // namespace snd
