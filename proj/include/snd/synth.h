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

// Procedural street-like scenes with controllable style shift (palette,
// illumination), layout shift (object placement) and class imbalance.
//
// Classes: 0 background, 1 sky band, 2 road band, 3 disc, 4 rectangle,
// 5 triangle. Class 0 is always present.

#ifndef SND_SYNTH_H_
#define SND_SYNTH_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "snd/numerics.h"
#include "snd/tensor.h"

namespace snd {

enum SceneClass : int {
  kBackground = 0,
  kSky = 1,
  kRoad = 2,
  kDisc = 3,
  kRectangle = 4,
  kTriangle = 5,
  kNumSceneClasses = 6,
};

using Rgb = std::array<double, 3>;

// Placement of one class as fractions of H (vertical) and W (horizontal).
// For the bands only the vertical entries are used (band edge position).
struct ClassLayout {
  double v_mean = 0.5;
  double v_spread = 0.1;
  double h_mean = 0.5;
  double h_spread = 0.2;
};

struct DomainSpec {
  std::string tag = "source";
  std::uint64_t style_seed = 0;
  int height = 48;
  int width = 48;
  std::vector<Rgb> palette;              // per class
  double illumination_amplitude = 0.15;  // per-sample amplitude ~ U(0, this)
  double illumination_frequency = 1.0;   // cycles across the image
  std::vector<ClassLayout> layout;       // per class
  std::vector<double> class_frequencies; // per class presence probability
  double instance_jitter = 0.03;         // per-object color offset stddev
  double noise_sigma = 0.03;
  double hue_jitter_degrees = 0.0;       // per-sample rotation stddev

  int num_classes() const { return static_cast<int>(palette.size()); }
  // Throws InvalidInputError when an invariant is violated.
  void Validate() const;
};

struct Sample {
  int id = 0;
  ImageTensor image;  // H x W x 3
  LabelMap gt_label;  // evaluation only
  std::string domain_tag;
  int num_classes = kNumSceneClasses;

  bool operator==(const Sample&) const = default;
};

// Desk-scale source domain.
DomainSpec DefaultSourceSpec();

// Target recipe: palette hue rotated about the gray axis, illumination
// gradient, displaced object placement, halved rare-class frequency.
struct ShiftRecipe {
  double hue_rotation_degrees = 27.0;
  double illumination_amplitude = 0.15;
  double vertical_offset = 0.12;    // added to object v_mean
  double horizontal_offset = 0.15;  // added to object h_mean
  double rare_frequency_scale = 0.5;
  int rare_class = kTriangle;
  double hue_jitter_degrees = 0.0;
};
DomainSpec ShiftDomain(const DomainSpec& source, const ShiftRecipe& recipe,
                       const std::string& tag = "target");
DomainSpec DefaultTargetSpec();

// Rotates an RGB color about the (1,1,1) axis.
Rgb RotateHue(const Rgb& color, double degrees);

// Brightness field 1 + a sin(2 pi f (y cos t / H + x sin t / W) + phase) of the
// scene generated from (spec, seed).
Grid2D IlluminationField(const DomainSpec& spec, std::uint64_t seed);

// Deterministic in (spec, seed). Layout draws depend on `seed` only, so two
// specs that differ only in palette or illumination give identical labels.
Sample GenerateScene(const DomainSpec& spec, std::uint64_t seed);

// `count` scenes with ids 0..count-1 and seeds MixSeed(base_seed, id).
std::vector<Sample> GenerateDataset(const DomainSpec& spec, int count,
                                    std::uint64_t base_seed);

// "SNDS" sample file: magic, u16 version, u16 H, u16 W, u16 C_img, u16 C_cls,
// image float32 LE row-major, gt u16 row-major, u16 tag length + UTF-8 tag.
std::string EncodeSample(const Sample& sample);
Sample DecodeSample(std::string_view bytes, int id);

// Writes one SNDS file per sample plus manifest.txt ("id filename tag" per
// line). Returns the number of sample files written.
int WriteDataset(const std::vector<Sample>& samples,
                 const std::filesystem::path& dir);
Sample ReadSample(const std::filesystem::path& dir, int id);
std::vector<Sample> ReadDataset(const std::filesystem::path& dir);

}  // namespace snd

#endif  // SND_SYNTH_H_
