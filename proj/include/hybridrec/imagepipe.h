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

#include <cstdint>
#include <optional>
#include <vector>

#include "hybridrec/datamodel.h"
#include "hybridrec/embedding_table.h"
#include "hybridrec/nn.h"
#include "hybridrec/textpipe.h"

namespace hybridrec {

inline constexpr int kImageProjectorLayers = 7;

/// Seven dense layers, rectifiers between them and a linear output, fed with
/// per-dimension standardized image features.
class ImageProjector {
 public:
  static std::vector<Eigen::Index> standard_widths() { return {2048, 1024, 512, 256, 256, 128, 128, 100}; }

  ImageProjector() = default;
  /// widths must describe exactly seven layers.
  ImageProjector(const std::vector<Eigen::Index>& widths, Rng& rng);
  ImageProjector(nn::DenseStack stack, Vec input_mean, Vec input_scale);

  Eigen::Index in() const { return stack_.in(); }
  Eigen::Index out() const { return stack_.out(); }
  const nn::DenseStack& stack() const { return stack_; }

  void set_standardization(Vec mean, Vec scale);
  const Vec& input_mean() const { return mean_; }
  const Vec& input_scale() const { return scale_; }

  /// Columns are samples.
  Mat forward(const Mat& features) const;
  /// Mean over samples of the per-dimension mean squared error; gradients
  /// accumulate into grads in parameters() order.
  double loss_and_grad(const Mat& features, const Mat& targets, std::vector<Mat>* grads) const;

  std::vector<Mat*> parameters() { return stack_.parameters(); }
  std::vector<const Mat*> parameters() const { return stack_.parameters(); }

  void save(const fs::path& dir) const;
  static ImageProjector load(const fs::path& dir);

 private:
  Mat standardize(const Mat& features) const;

  nn::DenseStack stack_;
  Vec mean_;
  Vec scale_;
};

/// Mean word vector of the first five in-vocabulary title tokens, or nothing
/// when the title has none.
std::optional<Vec> title_target(const Ad& ad, const WordVectors& wv);

struct ImageTrainingSet {
  std::vector<std::string> item_ids;
  Mat features;  // dim x n
  Mat targets;   // target dim x n
};

/// Pairs every ad that has both an image feature record and a title target.
ImageTrainingSet build_image_training_set(const AdCorpus& ads, const ImageFeatures& images, const WordVectors& wv);

struct MlpOptions {
  int epochs = 20;
  double step = 0.01;
  double momentum = 0.9;
  int batch = 32;
  std::uint64_t seed = 0;
  std::vector<Eigen::Index> widths = ImageProjector::standard_widths();
};

struct MlpFitResult {
  ImageProjector model;
  std::vector<double> mse_history;  // index 0 before training, then per epoch
};

MlpFitResult mlp_fit(const ImageTrainingSet& data, const MlpOptions& opts);

Vec image_embed(const Vec& feature, const ImageProjector& proj);
EmbeddingTable image_embed_all(const ImageFeatures& images, const ImageProjector& proj);

}  // namespace hybridrec
