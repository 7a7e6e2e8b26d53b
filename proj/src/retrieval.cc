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

#include "snd/retrieval.h"

#include <algorithm>
#include <cmath>

#include "snd/errors.h"
#include "snd/numerics.h"

namespace snd {

std::vector<double> StyleProxy(const ImageTensor& image, int r) {
  if (r < 1 || r > std::min(image.height, image.width)) {
    throw InvalidInputError("style proxy: window exceeds image size");
  }
  const int cy = image.height / 2 - r / 2;
  const int cx = image.width / 2 - r / 2;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(r) * r * image.channels);
  for (int ch = 0; ch < image.channels; ++ch) {
    Grid2D plane(image.height, image.width);
    for (int y = 0; y < image.height; ++y) {
      for (int x = 0; x < image.width; ++x) plane.at(y, x) = image.at(y, x, ch);
    }
    const Grid2D amp = Dft2Amplitude(plane);
    for (int y = 0; y < r; ++y) {
      for (int x = 0; x < r; ++x) out.push_back(amp.at(cy + y, cx + x));
    }
  }
  const double norm = Norm2(out);
  if (norm > 0.0) {
    for (double& v : out) v /= norm;
  }
  return out;
}

std::vector<double> LayoutProxy(const LabelMap& labels, int num_classes) {
  const int h = labels.height;
  const int w = labels.width;
  std::vector<double> rows(static_cast<std::size_t>(num_classes) * h, 0.0);
  std::vector<double> cols(static_cast<std::size_t>(num_classes) * w, 0.0);
  std::vector<int> totals(num_classes, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int c = labels.at(y, x);
      if (c >= num_classes) throw InvalidInputError("layout proxy: bad label");
      rows[static_cast<std::size_t>(c) * h + y] += 1.0;
      cols[static_cast<std::size_t>(c) * w + x] += 1.0;
      ++totals[c];
    }
  }
  for (int c = 0; c < num_classes; ++c) {
    if (totals[c] == 0) continue;
    for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(c) * h + y] /= totals[c];
    for (int x = 0; x < w; ++x) cols[static_cast<std::size_t>(c) * w + x] /= totals[c];
  }
  rows.insert(rows.end(), cols.begin(), cols.end());
  return rows;
}

double NeighborScore(const ProxyPair& query, const ProxyPair& candidate,
                     const RetrievalWeights& weights) {
  return weights.style * CosineSimilarity(query.style, candidate.style) +
         weights.layout * CosineSimilarity(query.layout, candidate.layout);
}

int NeighborQuery(const ProxyPair& query, const std::vector<IndexEntry>& index,
                  const RetrievalWeights& weights) {
  if (index.empty()) throw InvalidInputError("neighbor query: empty index");
  int best = index[0].sample_id;
  double best_score = NeighborScore(query, index[0].proxies, weights);
  for (std::size_t i = 1; i < index.size(); ++i) {
    const double s = NeighborScore(query, index[i].proxies, weights);
    const int id = index[i].sample_id;
    if (s > best_score || (s == best_score && id < best)) {
      best = id;
      best_score = s;
    }
  }
  return best;
}

}  // namespace snd
