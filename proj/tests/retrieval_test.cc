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

#include <gtest/gtest.h>

#include <complex>
#include <numbers>

#include "snd/errors.h"
#include "test_util.h"

namespace snd {
namespace {

using testing::RandomImage;
using testing::RandomLabels;

double NaiveAmplitude(const ImageTensor& img, int ch, int u, int v) {
  std::complex<long double> acc = 0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const long double a = -2.0L * std::numbers::pi_v<long double> *
                            (static_cast<long double>(u) * y / img.height +
                             static_cast<long double>(v) * x / img.width);
      acc += static_cast<long double>(img.at(y, x, ch)) *
             std::complex<long double>(std::cos(a), std::sin(a));
    }
  }
  return static_cast<double>(std::abs(acc));
}

double PlainCosine(const std::vector<double>& a, const std::vector<double>& b) {
  long double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<long double>(a[i]) * b[i];
    na += static_cast<long double>(a[i]) * a[i];
    nb += static_cast<long double>(b[i]) * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return static_cast<double>(dot / std::sqrt(na * nb));
}

TEST(StyleProxyTest, ConstantImageIsDcOnly) {
  ImageTensor img(8, 8, 3);
  for (float& v : img.data) v = 0.5f;
  const auto proxy = StyleProxy(img, 4);
  ASSERT_EQ(proxy.size(), 3u * 16u);
  int nonzero = 0;
  for (std::size_t i = 0; i < proxy.size(); ++i) {
    if (std::abs(proxy[i]) > 1e-9) {
      ++nonzero;
      EXPECT_EQ(i % 16, 2u * 4u + 2u);  // DC at the crop center
      EXPECT_NEAR(proxy[i], 1.0 / std::sqrt(3.0), 1e-12);
    }
  }
  EXPECT_EQ(nonzero, 3);
}

TEST(StyleProxyTest, CircularShiftInvariant) {
  Rng rng(81);
  const ImageTensor img = RandomImage(12, 10, 3, rng);
  ImageTensor shifted(12, 10, 3);
  for (int y = 0; y < 12; ++y) {
    for (int x = 0; x < 10; ++x) {
      for (int c = 0; c < 3; ++c) shifted.at((y + 5) % 12, (x + 3) % 10, c) = img.at(y, x, c);
    }
  }
  const auto a = StyleProxy(img, 6), b = StyleProxy(shifted, 6);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
}

TEST(StyleProxyTest, IntensityScaleInvariant) {
  Rng rng(82);
  const ImageTensor img = RandomImage(9, 9, 3, rng);
  ImageTensor dim = img;
  for (float& v : dim.data) v *= 0.25f;
  const auto a = StyleProxy(img, 5), b = StyleProxy(dim, 5);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
}

TEST(StyleProxyTest, MatchesNaiveDftCrop) {
  Rng rng(83);
  const ImageTensor img = RandomImage(16, 16, 3, rng);
  const int r = 8;
  std::vector<double> want;
  for (int ch = 0; ch < 3; ++ch) {
    for (int y = 0; y < r; ++y) {
      for (int x = 0; x < r; ++x) {
        // Crop rows 4..11 of the centered spectrum, i.e. frequencies -4..3.
        const int u = (y + 4 - 8 + 16) % 16, v = (x + 4 - 8 + 16) % 16;
        want.push_back(NaiveAmplitude(img, ch, u, v));
      }
    }
  }
  double norm = 0.0;
  for (double v : want) norm += v * v;
  norm = std::sqrt(norm);
  const auto got = StyleProxy(img, r);
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_NEAR(got[i], want[i] / norm, 1e-9);
  }
}

TEST(StyleProxyTest, BlackImageAndBadWindow) {
  const auto zero = StyleProxy(ImageTensor(6, 6, 3), 3);
  for (double v : zero) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(StyleProxy(ImageTensor(6, 6, 3), 7), InvalidInputError);
  EXPECT_THROW(StyleProxy(ImageTensor(6, 6, 3), 0), InvalidInputError);
}

TEST(LayoutProxyTest, TwoByTwo) {
  LabelMap labels(2, 2);
  labels.at(1, 0) = labels.at(1, 1) = 1;
  const auto p = LayoutProxy(labels, 2);
  // rows c0, rows c1, cols c0, cols c1
  EXPECT_EQ(p, (std::vector<double>{1.0, 0.0, 0.0, 1.0, 0.5, 0.5, 0.5, 0.5}));
}

TEST(LayoutProxyTest, UniformSingleClass) {
  const auto p = LayoutProxy(LabelMap(4, 4, 0), 3);
  ASSERT_EQ(p.size(), 3u * 4 + 3u * 4);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(p[i], 0.25);
    EXPECT_EQ(p[12 + i], 0.25);
  }
  for (int i = 4; i < 12; ++i) EXPECT_EQ(p[i], 0.0);
  for (int i = 16; i < 24; ++i) EXPECT_EQ(p[i], 0.0);
}

TEST(LayoutProxyTest, MatchesCountingOracle) {
  Rng rng(84);
  for (int trial = 0; trial < 10; ++trial) {
    const LabelMap labels = RandomLabels(8, 8, 4, rng);
    const auto p = LayoutProxy(labels, 5);
    for (int c = 0; c < 5; ++c) {
      int total = 0;
      for (auto v : labels.data) total += v == c;
      for (int y = 0; y < 8; ++y) {
        int n = 0;
        for (int x = 0; x < 8; ++x) n += labels.at(y, x) == c;
        EXPECT_EQ(p[c * 8 + y], total ? static_cast<double>(n) / total : 0.0);
      }
      for (int x = 0; x < 8; ++x) {
        int n = 0;
        for (int y = 0; y < 8; ++y) n += labels.at(y, x) == c;
        EXPECT_EQ(p[40 + c * 8 + x], total ? static_cast<double>(n) / total : 0.0);
      }
    }
  }
}

TEST(LayoutProxyTest, VerticalFlipReversesRowBlocks) {
  Rng rng(85);
  const LabelMap labels = RandomLabels(6, 5, 3, rng);
  LabelMap flipped(6, 5);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 5; ++x) flipped.at(5 - y, x) = labels.at(y, x);
  }
  const auto a = LayoutProxy(labels, 3), b = LayoutProxy(flipped, 3);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 6; ++y) EXPECT_EQ(b[c * 6 + y], a[c * 6 + 5 - y]);
  }
  for (std::size_t i = 18; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

ProxyPair RandomPair(Rng& rng) {
  return {StyleProxy(RandomImage(8, 8, 3, rng), 4),
          LayoutProxy(RandomLabels(8, 8, 4, rng), 4)};
}

TEST(NeighborQueryTest, SelfAndSingleton) {
  Rng rng(86);
  std::vector<IndexEntry> index;
  for (int i = 0; i < 6; ++i) index.push_back({10 + i, RandomPair(rng)});
  EXPECT_EQ(NeighborQuery(index[3].proxies, index), 13);
  EXPECT_EQ(NeighborQuery(RandomPair(rng), {index[4]}), 14);
  EXPECT_THROW(NeighborQuery(RandomPair(rng), {}), InvalidInputError);
}

TEST(NeighborQueryTest, TiesGoToLowerId) {
  Rng rng(87);
  const ProxyPair p = RandomPair(rng);
  EXPECT_EQ(NeighborQuery(RandomPair(rng), {{9, p}, {4, p}, {6, p}}), 4);
}

TEST(NeighborQueryTest, MatchesExhaustiveScan) {
  Rng rng(88);
  for (int draw = 0; draw < 100; ++draw) {
    const int n = 1 + rng.Index(12);
    std::vector<IndexEntry> index;
    for (int i = 0; i < n; ++i) index.push_back({rng.Index(1000), RandomPair(rng)});
    const ProxyPair q = RandomPair(rng);
    const RetrievalWeights w{rng.Uniform(), rng.Uniform()};
    int best = -1;
    double best_score = -1e300;
    for (const auto& e : index) {
      const double s = w.style * PlainCosine(q.style, e.proxies.style) +
                       w.layout * PlainCosine(q.layout, e.proxies.layout);
      if (s > best_score + 1e-12 ||
          (std::abs(s - best_score) <= 1e-12 && e.sample_id < best)) {
        best = e.sample_id;
        best_score = s;
      }
    }
    EXPECT_EQ(NeighborQuery(q, index, w), best);
  }
}

}  // namespace
}  // namespace snd
