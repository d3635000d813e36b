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
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hybridrec/datamodel.h"
#include "hybridrec/embedding_table.h"
#include "hybridrec/nn.h"

namespace hybridrec {

/// Lowercased alphanumeric runs; everything else separates tokens.
std::vector<std::string> tokenize(std::string_view text);

// Title followed by description.
std::vector<std::string> ad_tokens(const Ad& ad);

class WordVectors {
 public:
  WordVectors() = default;
  WordVectors(std::vector<std::string> vocab, Mat vectors);

  std::size_t size() const { return vocab_.size(); }
  Eigen::Index dim() const { return vectors_.cols(); }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const Mat& vectors() const { return vectors_; }

  std::optional<std::size_t> index(const std::string& token) const;
  Vec vector(std::size_t i) const { return vectors_.row(static_cast<Eigen::Index>(i)).transpose(); }
  // In-vocabulary token ids, out-of-vocabulary tokens dropped.
  std::vector<std::size_t> ids(const std::vector<std::string>& tokens) const;

  void save(const fs::path& dir) const;
  static WordVectors load(const fs::path& dir);

 private:
  std::vector<std::string> vocab_;
  Mat vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Word2VecOptions {
  int dim = 100;
  int window = 5;
  int negatives = 5;
  int epochs = 20;  // small desk-scale corpora need more passes than web-scale ones
  int min_count = 2;
  double step = 0.025;
  std::uint64_t seed = 0;
};

/// Skip-gram with negative sampling; negatives follow unigram^0.75. The
/// learning rate decays linearly over all epochs. Vocabulary is ordered by
/// descending frequency, then token.
WordVectors word2vec_fit(const std::vector<std::vector<std::string>>& corpus, const Word2VecOptions& opts);

// ---------------------------------------------------------------------------
// Convolutional category classifier

struct TextCnnShape {
  int embed_dim = 100;
  std::vector<int> widths = {2, 3, 4};
  int filters = 32;
  int hidden = 100;  // also the textual embedding dimension
  int seq_len = 64;
  int n_labels = 2;
};

/// One training/inference input: the (at most seq_len) looked-up token
/// vectors, one per row; positions past the last row are padding (zero).
struct TextSample {
  Mat tokens;
  int label = -1;
};

/// Convolutions of widths {2,3,4} with rectifier and max-over-time pooling,
/// a tanh hidden layer whose activation is the textual embedding, and a
/// softmax output over flat category/subcategory labels.
class TextClassifier {
 public:
  TextClassifier() = default;
  TextClassifier(TextCnnShape shape, std::vector<std::string> labels, Rng& rng);

  const TextCnnShape& shape() const { return shape_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<int> label_index(const std::string& label) const;

  /// Hidden-layer activation (the textual embedding).
  Vec embed(const TextSample& s) const;
  /// Class probabilities.
  Vec predict(const TextSample& s) const;

  /// Mean cross-entropy over samples; gradients are accumulated (already
  /// divided by the sample count) into grads, in parameters() order.
  double loss_and_grad(const std::vector<const TextSample*>& batch, std::vector<Mat>* grads) const;

  std::vector<Mat*> parameters();
  std::vector<const Mat*> parameters() const;

  void save(const fs::path& dir) const;
  static TextClassifier load(const fs::path& dir);

 private:
  struct ConvTrace {
    std::vector<Mat> windows;       // per width: S x (w * E) unfolded inputs
    std::vector<Mat> pre;           // per width: S x F pre-activations
    std::vector<std::vector<int>> argmax;  // per width, per filter; -1 = all-padding window
  };
  Vec pool(const Mat& tokens, ConvTrace* trace) const;

  TextCnnShape shape_;
  std::vector<std::string> labels_;
  std::vector<Mat> conv_weight_;  // per width: F x (w * E)
  std::vector<Mat> conv_bias_;    // per width: F x 1
  nn::DenseLayer hidden_;
  nn::DenseLayer output_;
};

/// Token vectors of the ad's title + description, truncated to seq_len.
TextSample encode_text(const std::vector<std::string>& tokens, const WordVectors& wv, int seq_len);

struct CnnOptions {
  int epochs = 10;
  double step = 0.05;
  double momentum = 0.9;
  int batch = 32;
  std::uint64_t seed = 0;
  TextCnnShape shape;  // n_labels and embed_dim are filled from the data
};

struct CnnFitResult {
  TextClassifier model;
  std::vector<double> loss_history;  // index 0 before training, then per epoch
  double train_accuracy = 0.0;
};

/// Trains on flat (category, subcategory) labels with frozen word vectors.
CnnFitResult cnn_fit(const AdCorpus& ads, const WordVectors& wv, const CnnOptions& opts);
CnnFitResult cnn_fit(const std::vector<TextSample>& samples, const std::vector<std::string>& labels,
                     const CnnOptions& opts);

Vec text_embed(const Ad& ad, const TextClassifier& clf, const WordVectors& wv);
EmbeddingTable text_embed_all(const AdCorpus& ads, const TextClassifier& clf, const WordVectors& wv);

}  // namespace hybridrec
