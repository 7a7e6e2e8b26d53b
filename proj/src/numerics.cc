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

#include "snd/numerics.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "snd/errors.h"
#include "snd/tensor.h"

namespace snd {

bool LabelMap::Contains(int c) const {
  return std::find(data.begin(), data.end(), static_cast<std::uint16_t>(c)) !=
         data.end();
}

std::vector<int> LabelMap::Histogram(int num_classes) const {
  std::vector<int> counts(num_classes, 0);
  for (std::uint16_t v : data) {
    if (v < num_classes) ++counts[v];
  }
  return counts;
}

std::vector<double> Softmax(std::span<const double> logits) {
  if (logits.empty()) throw InvalidInputError("softmax of empty vector");
  for (double v : logits) {
    if (!std::isfinite(v)) throw InvalidInputError("softmax of non-finite value");
  }
  std::vector<double> out(logits.begin(), logits.end());
  SoftmaxInPlace(out);
  return out;
}

void SoftmaxInPlace(std::span<double> logits) {
  double max_logit = logits[0];
  for (double v : logits) max_logit = std::max(max_logit, v);
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - max_logit);
    sum += v;
  }
  const double inv = 1.0 / sum;
  for (double& v : logits) v *= inv;
}

double CrossEntropy(std::span<const double> probs, int label) {
  if (label < 0 || label >= static_cast<int>(probs.size())) {
    throw InvalidInputError("cross-entropy label " + std::to_string(label) +
                            " out of range");
  }
  return -std::log(std::max(probs[label], kProbEpsilon));
}

namespace {

// Twiddle table exp(-2 pi i k / n) for k in [0, n). Indexing by (u * t) % n
// keeps the argument reduction exact.
std::vector<std::complex<double>> Twiddles(int n) {
  std::vector<std::complex<double>> table(n);
  for (int k = 0; k < n; ++k) {
    const double angle = -2.0 * std::numbers::pi * k / n;
    table[k] = {std::cos(angle), std::sin(angle)};
  }
  return table;
}

}  // namespace

Grid2D Dft2Amplitude(const Grid2D& channel) {
  const int h = channel.height;
  const int w = channel.width;
  if (h < 1 || w < 1) throw InvalidInputError("DFT of empty grid");
  const auto tw_w = Twiddles(w);
  const auto tw_h = Twiddles(h);

  // Row transforms.
  std::vector<std::complex<double>> rows(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int v = 0; v < w; ++v) {
      std::complex<double> acc = 0.0;
      for (int x = 0; x < w; ++x) {
        acc += channel.at(y, x) * tw_w[(static_cast<long>(v) * x) % w];
      }
      rows[static_cast<std::size_t>(y) * w + v] = acc;
    }
  }
  // Column transforms, written straight into the shifted output.
  Grid2D out(h, w);
  for (int v = 0; v < w; ++v) {
    for (int u = 0; u < h; ++u) {
      std::complex<double> acc = 0.0;
      for (int y = 0; y < h; ++y) {
        acc += rows[static_cast<std::size_t>(y) * w + v] *
               tw_h[(static_cast<long>(u) * y) % h];
      }
      out.at((u + h / 2) % h, (v + w / 2) % w) = std::abs(acc);
    }
  }
  return out;
}

double Dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidInputError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double Norm2(std::span<const double> a) { return std::sqrt(Dot(a, a)); }

double CosineSimilarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvalidInputError("cosine similarity: length mismatch");
  }
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

int Argmax(std::span<const double> values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace snd
