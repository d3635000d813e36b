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

#include "hybridrec/nn.h"

#include <cmath>

namespace hybridrec::nn {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kLinear: return "linear";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
  }
  return "linear";
}

Activation parse_activation(const std::string& name) {
  if (name == "linear") return Activation::kLinear;
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw Error("unknown activation '" + name + "'");
}

Mat activate(const Mat& pre, Activation a) {
  switch (a) {
    case Activation::kLinear: return pre;
    case Activation::kRelu: return pre.cwiseMax(0.0);
    case Activation::kTanh: return pre.array().tanh().matrix();
  }
  return pre;
}

Mat activation_backward(const Mat& pre, const Mat& out, const Mat& grad_out, Activation a) {
  switch (a) {
    case Activation::kLinear: return grad_out;
    case Activation::kRelu: return (pre.array() > 0.0).select(grad_out, 0.0);
    case Activation::kTanh: return (grad_out.array() * (1.0 - out.array().square())).matrix();
  }
  return grad_out;
}

DenseLayer make_dense(Eigen::Index in, Eigen::Index out, Activation a, Rng& rng) {
  DenseLayer l;
  l.activation = a;
  const double limit = a == Activation::kRelu ? std::sqrt(6.0 / static_cast<double>(in))
                                              : std::sqrt(6.0 / static_cast<double>(in + out));
  l.weight.resize(out, in);
  for (Eigen::Index c = 0; c < in; ++c) {
    for (Eigen::Index r = 0; r < out; ++r) l.weight(r, c) = rng.uniform(-limit, limit);
  }
  l.bias = Mat::Zero(out, 1);
  return l;
}

DenseStack::DenseStack(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw Error("dense stack needs at least one layer");
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    if (layers_[i].in() != layers_[i - 1].out()) throw Error("dense stack: layer widths do not chain");
  }
}

DenseStack::DenseStack(const std::vector<Eigen::Index>& widths, Activation hidden, Activation last, Rng& rng) {
  if (widths.size() < 2) throw Error("dense stack needs at least two widths");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const bool is_last = i + 2 == widths.size();
    layers_.push_back(make_dense(widths[i], widths[i + 1], is_last ? last : hidden, rng));
  }
}

Mat DenseStack::forward(const Mat& x) const {
  Mat h = x;
  for (const auto& l : layers_) {
    Mat pre = l.weight * h;
    pre.colwise() += l.bias.col(0);
    h = activate(pre, l.activation);
  }
  return h;
}

Mat DenseStack::forward(const Mat& x, std::vector<DenseCache>& caches) const {
  caches.resize(layers_.size());
  const Mat* h = &x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    auto& c = caches[i];
    c.input = *h;
    c.pre.noalias() = l.weight * c.input;
    c.pre.colwise() += l.bias.col(0);
    c.out = activate(c.pre, l.activation);
    h = &c.out;
  }
  return caches.back().out;
}

Mat DenseStack::backward(const Mat& grad_out, const std::vector<DenseCache>& caches, std::vector<Mat>& grads,
                         std::size_t offset) const {
  Mat g = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const auto& l = layers_[i];
    const auto& c = caches[i];
    const Mat dpre = activation_backward(c.pre, c.out, g, l.activation);
    grads[offset + 2 * i].noalias() += dpre * c.input.transpose();
    grads[offset + 2 * i + 1] += dpre.rowwise().sum();
    g.noalias() = l.weight.transpose() * dpre;
  }
  return g;
}

std::vector<Mat*> DenseStack::parameters() {
  std::vector<Mat*> p;
  for (auto& l : layers_) {
    p.push_back(&l.weight);
    p.push_back(&l.bias);
  }
  return p;
}

std::vector<const Mat*> DenseStack::parameters() const {
  std::vector<const Mat*> p;
  for (const auto& l : layers_) {
    p.push_back(&l.weight);
    p.push_back(&l.bias);
  }
  return p;
}

void DenseStack::save(const fs::path& dir, const std::string& prefix, Manifest& manifest) const {
  manifest.set(prefix + ".layers", static_cast<std::int64_t>(layers_.size()));
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::string name = prefix + ".layer" + std::to_string(i);
    manifest.set(name + ".activation", activation_name(layers_[i].activation));
    write_mat0(dir / (name + ".weight.mat"), layers_[i].weight);
    write_mat0(dir / (name + ".bias.mat"), layers_[i].bias);
  }
}

DenseStack DenseStack::load(const fs::path& dir, const std::string& prefix, const Manifest& manifest) {
  const auto n = manifest.get_int(prefix + ".layers");
  std::vector<DenseLayer> layers;
  for (std::int64_t i = 0; i < n; ++i) {
    const std::string name = prefix + ".layer" + std::to_string(i);
    DenseLayer l;
    l.activation = parse_activation(manifest.get(name + ".activation"));
    l.weight = read_mat0(dir / (name + ".weight.mat"));
    l.bias = read_mat0(dir / (name + ".bias.mat"));
    if (l.bias.rows() != l.weight.rows() || l.bias.cols() != 1) throw Error("bias shape mismatch in " + name);
    layers.push_back(std::move(l));
  }
  return DenseStack(std::move(layers));
}

std::vector<Mat> zeros_like(const std::vector<const Mat*>& params) {
  std::vector<Mat> out;
  out.reserve(params.size());
  for (const Mat* p : params) out.push_back(Mat::Zero(p->rows(), p->cols()));
  return out;
}

Momentum::Momentum(std::vector<Mat*> params, double step, double momentum)
    : params_(std::move(params)), step_(step), momentum_(momentum) {
  if (!(step > 0.0)) throw Error("optimizer step must be positive");
  for (Mat* p : params_) velocity_.push_back(Mat::Zero(p->rows(), p->cols()));
}

void Momentum::apply(const std::vector<Mat>& grads) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    velocity_[i] = momentum_ * velocity_[i] - step_ * grads[i];
    *params_[i] += velocity_[i];
  }
}

Mat softmax_columns(const Mat& logits) {
  Mat out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double mx = logits.col(c).maxCoeff();
    out.col(c) = (logits.col(c).array() - mx).exp().matrix();
    out.col(c) /= out.col(c).sum();
  }
  return out;
}

}  // namespace hybridrec::nn
