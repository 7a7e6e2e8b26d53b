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

// Deterministic dense-array primitives. Everything here is pure and
// reentrant.

#ifndef SND_NUMERICS_H_
#define SND_NUMERICS_H_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace snd {

// Clamp used inside CrossEntropy so that -ln(0) stays bounded.
inline constexpr double kProbEpsilon = 1e-12;

// Row-major 2-D grid of doubles.
struct Grid2D {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  Grid2D() = default;
  Grid2D(int h, int w, double fill = 0.0)
      : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}

  double& at(int y, int x) {
    return values[static_cast<std::size_t>(y) * width + x];
  }
  double at(int y, int x) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }
};

// Max-subtracted softmax. Throws InvalidInputError on empty or non-finite
// input.
std::vector<double> Softmax(std::span<const double> logits);

// In-place variant used by the pixel kernels. No validation.
void SoftmaxInPlace(std::span<double> logits);

// -ln(max(probs[label], kProbEpsilon)).
double CrossEntropy(std::span<const double> probs, int label);

// Unnormalized magnitude of the 2-D DFT, shifted so that the zero frequency
// sits at (height / 2, width / 2). Evaluated as separable row/column DFTs,
// which is exact up to rounding with respect to the direct quadruple sum.
Grid2D Dft2Amplitude(const Grid2D& channel);

// a.b / (|a||b|); 0 when either vector has zero norm.
double CosineSimilarity(std::span<const double> a, std::span<const double> b);

double Dot(std::span<const double> a, std::span<const double> b);
double Norm2(std::span<const double> a);

// Index of the largest entry; ties go to the lowest index.
int Argmax(std::span<const double> values);

// Seeded generator. Every stochastic choice in the project draws from one of
// these, so identical seeds give identical runs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double Uniform() { return std::uniform_real_distribution<double>()(engine_); }
  double Uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double Normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  // Uniform integer in [0, n).
  int Index(int n) { return std::uniform_int_distribution<int>(0, n - 1)(engine_); }
  std::uint64_t Next() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Derives an independent stream seed from (seed, stream) via splitmix64.
std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream);

}  // namespace snd

#endif  // SND_NUMERICS_H_
