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

// Dense row-major grids shared by every module. All of them are plain value
// types; pixel l = y * width + x, channel-minor.

#ifndef SND_TENSOR_H_
#define SND_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace snd {

// H x W x C image, intensities in [0, 1].
struct ImageTensor {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  ImageTensor() = default;
  ImageTensor(int h, int w, int c)
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * w * c, 0.0f) {}

  int pixels() const { return height * width; }
  float& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  float at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool operator==(const ImageTensor&) const = default;
};

// H x W class indices.
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint16_t> data;

  LabelMap() = default;
  LabelMap(int h, int w, std::uint16_t fill = 0)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  int pixels() const { return height * width; }
  std::uint16_t& at(int y, int x) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::uint16_t at(int y, int x) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  bool Contains(int c) const;
  // Per-class pixel counts, length num_classes.
  std::vector<int> Histogram(int num_classes) const;
  bool operator==(const LabelMap&) const = default;
};

// H x W x C per-pixel probability simplex.
struct ProbMap {
  int height = 0;
  int width = 0;
  int classes = 0;
  std::vector<double> data;

  ProbMap() = default;
  ProbMap(int h, int w, int c)
      : height(h), width(w), classes(c),
        data(static_cast<std::size_t>(h) * w * c, 0.0) {}

  int pixels() const { return height * width; }
  std::span<double> pixel(int l) {
    return {data.data() + static_cast<std::size_t>(l) * classes,
            static_cast<std::size_t>(classes)};
  }
  std::span<const double> pixel(int l) const {
    return {data.data() + static_cast<std::size_t>(l) * classes,
            static_cast<std::size_t>(classes)};
  }
};

// H x W x F fixed per-pixel features.
struct FeatureMap {
  int height = 0;
  int width = 0;
  int dim = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(int h, int w, int f)
      : height(h), width(w), dim(f),
        data(static_cast<std::size_t>(h) * w * f, 0.0) {}

  int pixels() const { return height * width; }
  std::span<const double> pixel(int l) const {
    return {data.data() + static_cast<std::size_t>(l) * dim,
            static_cast<std::size_t>(dim)};
  }
  std::span<double> pixel(int l) {
    return {data.data() + static_cast<std::size_t>(l) * dim,
            static_cast<std::size_t>(dim)};
  }
};

// Per-pixel non-negative loss weights (omega).
struct UncertaintyMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  UncertaintyMap() = default;
  UncertaintyMap(int h, int w, double fill = 1.0)
      : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}

  static UncertaintyMap Ones(int h, int w) { return UncertaintyMap(h, w, 1.0); }
  int pixels() const { return height * width; }
};

}  // namespace snd

#endif  // SND_TENSOR_H_
