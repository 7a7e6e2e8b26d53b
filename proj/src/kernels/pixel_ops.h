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

// Single-pixel bodies shared by the serial and OpenMP kernel loops.

#ifndef SND_SRC_KERNELS_PIXEL_OPS_H_
#define SND_SRC_KERNELS_PIXEL_OPS_H_

#include <algorithm>
#include <cmath>
#include <span>

#include "snd/numerics.h"
#include "snd/params.h"
#include "snd/tensor.h"

namespace snd::kernels::internal {

inline float Replicate(const ImageTensor& img, int y, int x, int c) {
  y = std::clamp(y, 0, img.height - 1);
  x = std::clamp(x, 0, img.width - 1);
  return img.at(y, x, c);
}

// Feature layout per pixel: [raw(C), box(C), sobel_x(C), sobel_y(C), 1].
inline void PixelFeatures(const ImageTensor& img, int y, int x,
                          std::span<double> out) {
  const int ch = img.channels;
  for (int c = 0; c < ch; ++c) {
    double n[3][3];
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        n[dy + 1][dx + 1] = Replicate(img, y + dy, x + dx, c);
      }
    }
    double box = 0.0;
    for (const auto& row : n) {
      for (double v : row) box += v;
    }
    const double gx = ((n[0][2] + 2.0 * n[1][2] + n[2][2]) -
                       (n[0][0] + 2.0 * n[1][0] + n[2][0])) / 8.0;
    const double gy = ((n[2][0] + 2.0 * n[2][1] + n[2][2]) -
                       (n[0][0] + 2.0 * n[0][1] + n[0][2])) / 8.0;
    out[c] = n[1][1] - 0.5;
    out[ch + c] = box / 9.0 - 0.5;
    out[2 * ch + c] = gx;
    out[3 * ch + c] = gy;
  }
  out[4 * ch] = 1.0;
}

inline void PixelForward(const ParamTensor& params,
                         std::span<const double> phi, std::span<double> probs) {
  const int classes = params.classes();
  const int dim = params.dim();
  for (int c = 0; c < classes; ++c) {
    const auto row = params.weight_row(c);
    double z = params.bias(c);
    for (int f = 0; f < dim; ++f) z += row[f] * phi[f];
    probs[c] = z;
  }
  SoftmaxInPlace(probs);
}

// Adds w * (p - e_y) x [phi; 1] into `grad` (ParamTensor layout) and returns
// w * CE. `probs` is scratch of length classes.
inline double PixelLossGrad(const ParamTensor& params,
                            std::span<const double> phi, int label,
                            double weight, std::span<double> probs,
                            std::span<double> grad) {
  PixelForward(params, phi, probs);
  const int classes = params.classes();
  const int dim = params.dim();
  const double loss = weight * -std::log(std::max(probs[label], kProbEpsilon));
  double* bias = grad.data() + static_cast<std::size_t>(classes) * dim;
  for (int c = 0; c < classes; ++c) {
    const double r = weight * (probs[c] - (c == label ? 1.0 : 0.0));
    double* row = grad.data() + static_cast<std::size_t>(c) * dim;
    for (int f = 0; f < dim; ++f) row[f] += r * phi[f];
    bias[c] += r;
  }
  return loss;
}

// (p - e_y)^T G [phi; 1], optionally |p - e_y| * |[phi; 1]|.
inline double PixelMetaProduct(const ParamTensor& g,
                               std::span<const double> probs, int label,
                               std::span<const double> phi, double* norm) {
  const int classes = g.classes();
  const int dim = g.dim();
  double total = 0.0;
  double r_sq = 0.0;
  for (int c = 0; c < classes; ++c) {
    const double r = probs[c] - (c == label ? 1.0 : 0.0);
    r_sq += r * r;
    const auto row = g.weight_row(c);
    double gphi = g.bias(c);
    for (int f = 0; f < dim; ++f) gphi += row[f] * phi[f];
    total += r * gphi;
  }
  if (norm != nullptr) {
    double phi_sq = 1.0;
    for (int f = 0; f < dim; ++f) phi_sq += phi[f] * phi[f];
    *norm = std::sqrt(r_sq * phi_sq);
  }
  return total;
}

}  // namespace snd::kernels::internal

#endif  // SND_SRC_KERNELS_PIXEL_OPS_H_
