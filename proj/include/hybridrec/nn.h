// Copyright 2026 The hybridrec Authors
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

#pragma once

// Minimal dense-network toolkit used by the classifier, the image projector
// and the fusion tower. Batches are column-major: one sample per column.

#include <string>
#include <vector>

#include "hybridrec/common.h"

namespace hybridrec::nn {

enum class Activation { kLinear, kRelu, kTanh };

std::string activation_name(Activation a);
Activation parse_activation(const std::string& name);

Mat activate(const Mat& pre, Activation a);
// Gradient w.r.t. the pre-activation given the gradient w.r.t. the output.
Mat activation_backward(const Mat& pre, const Mat& out, const Mat& grad_out, Activation a);

struct DenseLayer {
  Mat weight;  // out x in
  Mat bias;    // out x 1
  Activation activation = Activation::kLinear;

  Eigen::Index in() const { return weight.cols(); }
  Eigen::Index out() const { return weight.rows(); }
};

/// Uniform He (rectifier) or Glorot (otherwise) initialization, zero bias.
DenseLayer make_dense(Eigen::Index in, Eigen::Index out, Activation a, Rng& rng);

struct DenseCache {
  Mat input;
  Mat pre;
  Mat out;
};

class DenseStack {
 public:
  DenseStack() = default;
  explicit DenseStack(std::vector<DenseLayer> layers);
  /// widths.size() - 1 layers; `hidden` between layers, `last` on the output.
  DenseStack(const std::vector<Eigen::Index>& widths, Activation hidden, Activation last, Rng& rng);

  std::size_t depth() const { return layers_.size(); }
  Eigen::Index in() const { return layers_.front().in(); }
  Eigen::Index out() const { return layers_.back().out(); }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  Mat forward(const Mat& x) const;
  Mat forward(const Mat& x, std::vector<DenseCache>& caches) const;
  /// Accumulates parameter gradients into grads (weight, bias per layer, in
  /// parameter order) and returns the gradient w.r.t. the input.
  Mat backward(const Mat& grad_out, const std::vector<DenseCache>& caches, std::vector<Mat>& grads,
               std::size_t offset = 0) const;

  std::vector<Mat*> parameters();
  std::vector<const Mat*> parameters() const;

  void save(const fs::path& dir, const std::string& prefix, Manifest& manifest) const;
  static DenseStack load(const fs::path& dir, const std::string& prefix, const Manifest& manifest);

 private:
  std::vector<DenseLayer> layers_;
};

/// Zero matrices shaped like the given parameters.
std::vector<Mat> zeros_like(const std::vector<const Mat*>& params);

/// Classical momentum: v <- mu * v - step * g; p <- p + v.
class Momentum {
 public:
  Momentum(std::vector<Mat*> params, double step, double momentum);
  void apply(const std::vector<Mat>& grads);

 private:
  std::vector<Mat*> params_;
  std::vector<Mat> velocity_;
  double step_;
  double momentum_;
};

/// Column-wise softmax.
Mat softmax_columns(const Mat& logits);

}  // namespace hybridrec::nn
