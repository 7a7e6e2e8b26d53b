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

#ifndef SND_PARAMS_H_
#define SND_PARAMS_H_

#include <cstddef>
#include <span>
#include <vector>

namespace snd {

// Storage shared by ModelParams and Gradient: a classes x dim weight matrix
// (row-major) followed by a classes-long bias, in one flat vector so that
// inner products between parameter-shaped objects are a single dot.
class ParamTensor {
 public:
  ParamTensor() = default;
  ParamTensor(int classes, int dim)
      : classes_(classes), dim_(dim),
        values_(static_cast<std::size_t>(classes) * (dim + 1), 0.0) {}

  int classes() const { return classes_; }
  int dim() const { return dim_; }
  std::size_t size() const { return values_.size(); }

  double& weight(int c, int f) {
    return values_[static_cast<std::size_t>(c) * dim_ + f];
  }
  double weight(int c, int f) const {
    return values_[static_cast<std::size_t>(c) * dim_ + f];
  }
  double& bias(int c) {
    return values_[static_cast<std::size_t>(classes_) * dim_ + c];
  }
  double bias(int c) const {
    return values_[static_cast<std::size_t>(classes_) * dim_ + c];
  }

  std::span<double> flat() { return values_; }
  std::span<const double> flat() const { return values_; }
  std::span<const double> weight_row(int c) const {
    return {values_.data() + static_cast<std::size_t>(c) * dim_,
            static_cast<std::size_t>(dim_)};
  }

  bool SameShape(const ParamTensor& other) const {
    return classes_ == other.classes_ && dim_ == other.dim_;
  }
  bool AllFinite() const;

 protected:
  int classes_ = 0;
  int dim_ = 0;
  std::vector<double> values_;
};

// Segmenter weights Theta. Teacher, student and every intermediate
// iterate are values of this type.
class ModelParams : public ParamTensor {
 public:
  using ParamTensor::ParamTensor;
  bool operator==(const ModelParams& o) const {
    return classes_ == o.classes_ && dim_ == o.dim_ && values_ == o.values_;
  }
};

// dLoss/dTheta, same layout as ModelParams.
class Gradient : public ParamTensor {
 public:
  using ParamTensor::ParamTensor;
};

}  // namespace snd

#endif  // SND_PARAMS_H_
