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

#include "hybridrec/imagepipe.h"

#include <cmath>
#include <numeric>

namespace hybridrec {

ImageProjector::ImageProjector(const std::vector<Eigen::Index>& widths, Rng& rng) {
  if (widths.size() != kImageProjectorLayers + 1) {
    throw Error("image projector must have exactly " + std::to_string(kImageProjectorLayers) + " layers");
  }
  stack_ = nn::DenseStack(widths, nn::Activation::kRelu, nn::Activation::kLinear, rng);
  mean_ = Vec::Zero(widths.front());
  scale_ = Vec::Ones(widths.front());
}

ImageProjector::ImageProjector(nn::DenseStack stack, Vec input_mean, Vec input_scale)
    : stack_(std::move(stack)) {
  if (stack_.depth() != kImageProjectorLayers) {
    throw Error("image projector must have exactly " + std::to_string(kImageProjectorLayers) + " layers");
  }
  set_standardization(std::move(input_mean), std::move(input_scale));
}

void ImageProjector::set_standardization(Vec mean, Vec scale) {
  if (mean.size() != stack_.in() || scale.size() != stack_.in()) throw Error("image projector: standardization width");
  if ((scale.array() <= 0.0).any()) throw Error("image projector: standardization scale must be positive");
  mean_ = std::move(mean);
  scale_ = std::move(scale);
}

Mat ImageProjector::standardize(const Mat& features) const {
  if (features.rows() != stack_.in()) {
    throw Error("image projector: feature dimension " + std::to_string(features.rows()) + ", expected " +
                std::to_string(stack_.in()));
  }
  return ((features.colwise() - mean_).array().colwise() / scale_.array()).matrix();
}

Mat ImageProjector::forward(const Mat& features) const { return stack_.forward(standardize(features)); }

double ImageProjector::loss_and_grad(const Mat& features, const Mat& targets, std::vector<Mat>* grads) const {
  if (targets.rows() != stack_.out() || targets.cols() != features.cols()) {
    throw Error("image projector: target shape mismatch");
  }
  const auto n = static_cast<double>(features.cols());
  const auto d = static_cast<double>(targets.rows());
  std::vector<nn::DenseCache> caches;
  const Mat pred = stack_.forward(standardize(features), caches);
  const Mat diff = pred - targets;
  const double loss = diff.squaredNorm() / (n * d);
  if (grads) stack_.backward(diff * (2.0 / (n * d)), caches, *grads);
  return loss;
}

void ImageProjector::save(const fs::path& dir) const {
  fs::create_directories(dir);
  Manifest m;
  m.set("kind", "image_projector");
  m.set("in", static_cast<std::int64_t>(in()));
  m.set("out", static_cast<std::int64_t>(out()));
  stack_.save(dir, "mlp", m);
  m.write(dir / "manifest");
  write_vec0(dir / "input_mean.mat", mean_);
  write_vec0(dir / "input_scale.mat", scale_);
}

ImageProjector ImageProjector::load(const fs::path& dir) {
  const Manifest m = Manifest::read(dir / "manifest");
  return ImageProjector(nn::DenseStack::load(dir, "mlp", m), read_vec0(dir / "input_mean.mat"),
                        read_vec0(dir / "input_scale.mat"));
}

std::optional<Vec> title_target(const Ad& ad, const WordVectors& wv) {
  const auto ids = wv.ids(tokenize(ad.title));
  if (ids.empty()) return std::nullopt;
  const std::size_t n = std::min<std::size_t>(5, ids.size());
  Vec sum = Vec::Zero(wv.dim());
  for (std::size_t i = 0; i < n; ++i) sum += wv.vector(ids[i]);
  return Vec(sum / static_cast<double>(n));
}

ImageTrainingSet build_image_training_set(const AdCorpus& ads, const ImageFeatures& images, const WordVectors& wv) {
  std::vector<std::size_t> rows;
  std::vector<Vec> targets;
  ImageTrainingSet set;
  for (const auto& ad : ads) {
    const auto row = images.find(ad.item_id);
    if (!row) continue;
    auto target = title_target(ad, wv);
    if (!target) continue;
    set.item_ids.push_back(ad.item_id);
    rows.push_back(*row);
    targets.push_back(std::move(*target));
  }
  set.features.resize(images.dim(), static_cast<Eigen::Index>(rows.size()));
  set.targets.resize(wv.dim(), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    set.features.col(static_cast<Eigen::Index>(i)) = images.row_d(rows[i]);
    set.targets.col(static_cast<Eigen::Index>(i)) = targets[i];
  }
  return set;
}

MlpFitResult mlp_fit(const ImageTrainingSet& data, const MlpOptions& opts) {
  const Eigen::Index n = data.features.cols();
  if (n == 0) throw Error("mlp_fit: zero training pairs");
  if (data.features.rows() != opts.widths.front()) {
    throw Error("mlp_fit: feature dimension " + std::to_string(data.features.rows()) + ", expected " +
                std::to_string(opts.widths.front()));
  }
  if (data.targets.rows() != opts.widths.back() || data.targets.cols() != n) {
    throw Error("mlp_fit: target dimension mismatch");
  }
  if (!(opts.step > 0.0) || opts.epochs < 1 || opts.batch < 1) throw Error("mlp_fit: invalid options");

  Rng rng(opts.seed);
  MlpFitResult result;
  result.model = ImageProjector(opts.widths, rng);
  ImageProjector& model = result.model;

  const Vec mean = data.features.rowwise().mean();
  Vec scale = ((data.features.colwise() - mean).array().square().rowwise().sum() / static_cast<double>(n))
                  .sqrt()
                  .matrix();
  for (Eigen::Index i = 0; i < scale.size(); ++i) {
    if (!(scale[i] > 1e-8)) scale[i] = 1.0;
  }
  model.set_standardization(mean, scale);

  nn::Momentum optimizer(model.parameters(), opts.step, opts.momentum);
  result.mse_history.push_back(model.loss_and_grad(data.features, data.targets, nullptr));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(opts.batch)) {
      const std::size_t end = std::min(order.size(), i + static_cast<std::size_t>(opts.batch));
      const auto b = static_cast<Eigen::Index>(end - i);
      Mat x(data.features.rows(), b);
      Mat y(data.targets.rows(), b);
      for (Eigen::Index j = 0; j < b; ++j) {
        x.col(j) = data.features.col(order[i + static_cast<std::size_t>(j)]);
        y.col(j) = data.targets.col(order[i + static_cast<std::size_t>(j)]);
      }
      auto grads = nn::zeros_like(std::as_const(model).parameters());
      model.loss_and_grad(x, y, &grads);
      optimizer.apply(grads);
    }
    result.mse_history.push_back(model.loss_and_grad(data.features, data.targets, nullptr));
    if (!std::isfinite(result.mse_history.back())) throw Error("mlp_fit: training diverged");
  }
  return result;
}

Vec image_embed(const Vec& feature, const ImageProjector& proj) {
  if (!feature.allFinite()) throw Error("image_embed: non-finite input feature");
  Vec out = proj.forward(feature).col(0);
  if (!out.allFinite()) throw Error("image_embed: non-finite output");
  return out;
}

EmbeddingTable image_embed_all(const ImageFeatures& images, const ImageProjector& proj) {
  Mat features(images.dim(), static_cast<Eigen::Index>(images.size()));
  for (std::size_t i = 0; i < images.size(); ++i) features.col(static_cast<Eigen::Index>(i)) = images.row_d(i);
  if (!features.allFinite()) throw Error("image_embed: non-finite input feature");
  Mat out = proj.forward(features);
  return EmbeddingTable(images.ids(), out.transpose());
}

}  // namespace hybridrec
