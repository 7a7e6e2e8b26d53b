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

// Appearance and layout descriptors, and nearest-stable-neighbor lookup.

#ifndef SND_RETRIEVAL_H_
#define SND_RETRIEVAL_H_

#include <vector>

#include "snd/tensor.h"

namespace snd {

// Per channel: centered DFT amplitude, central r x r crop, flattened;
// channels concatenated and L2-normalized (all zeros for a black image).
// Throws InvalidInputError if r exceeds min(H, W) or r < 1.
std::vector<double> StyleProxy(const ImageTensor& image, int r);

// Row histograms of every class followed by column histograms of every
// class: [rows(c0) .. rows(cC-1), cols(c0) .. cols(cC-1)]. A present class
// has each block summing to 1; absent classes have zero blocks.
std::vector<double> LayoutProxy(const LabelMap& labels, int num_classes);

struct ProxyPair {
  std::vector<double> style;
  std::vector<double> layout;
};

struct IndexEntry {
  int sample_id = 0;
  ProxyPair proxies;
};

struct RetrievalWeights {
  double style = 0.5;
  double layout = 0.5;
};

double NeighborScore(const ProxyPair& query, const ProxyPair& candidate,
                     const RetrievalWeights& weights = {});

// Id maximizing NeighborScore, ties to the lower id. Throws
// InvalidInputError on an empty index.
int NeighborQuery(const ProxyPair& query, const std::vector<IndexEntry>& index,
                  const RetrievalWeights& weights = {});

}  // namespace snd

#endif  // SND_RETRIEVAL_H_
