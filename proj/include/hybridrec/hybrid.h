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

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hybridrec/datamodel.h"
#include "hybridrec/embedding_table.h"
#include "hybridrec/nn.h"

namespace hybridrec {

inline constexpr std::size_t kNumGroups = 4;
enum class Group : std::size_t { kCf = 0, kText = 1, kImage = 2, kLocation = 3 };
std::string_view group_name(std::size_t g);

/// Per-item inputs of the fusion model. An absent group has an empty vector.
struct FeatureBundle {
  std::string item_id;
  std::array<Vec, kNumGroups> groups;
  std::array<bool, kNumGroups> presence{};

  const Vec& group(Group g) const { return groups[static_cast<std::size_t>(g)]; }
  bool has(Group g) const { return presence[static_cast<std::size_t>(g)]; }
  void set(Group g, Vec v);
  void clear(Group g);
};

/// First-stage outputs the bundles are assembled from. Null tables count as
/// empty.
struct BundleSources {
  const AdCorpus* ads = nullptr;
  const EmbeddingTable* cf = nullptr;
  const EmbeddingTable* text = nullptr;
  const EmbeddingTable* image = nullptr;
  const EmbeddingTable* location = nullptr;  // keyed by postcode
  bool normalize = true;                     // scale each group vector to unit length
};

FeatureBundle assemble(const std::string& item_id, const BundleSources& src);
std::unordered_map<std::string, FeatureBundle> assemble_all(const BundleSources& src);

struct PairExample {
  std::string item_a;
  std::string item_b;
  bool positive = true;

  bool operator==(const PairExample&) const = default;
};

/// Unordered pairs of distinct items on which one user emitted SendMessage or
/// ShowPhone during the same UTC day, deduplicated; item_a < item_b, sorted.
std::vector<PairExample> build_pairs(const EventLog& events);

/// For each positive (a, b) draws `ratio` partners uniformly from the
/// universe minus a, rejecting partners already paired positively with a.
std::vector<PairExample> sample_negatives(const std::vector<PairExample>& positives,
                                          const std::vector<std::string>& universe, int ratio,
                                          std::uint64_t seed, int max_retries = 100);

void save_pairs(const fs::path& path, const std::vector<PairExample>& pairs);
std::vector<PairExample> load_pairs(const fs::path& path);

struct HybridShape {
  std::array<int, kNumGroups> group_dims = {100, 100, 100, 10};
  std::vector<int> tower = {256, 128, 100};

  int input_dim() const;
  int group_offset(std::size_t g) const;
  int output_dim() const { return tower.back(); }
};

/// Siamese fusion model: softmax gate over the present feature groups, a
/// towering rectifier network over the gated concatenation, and unit-length
/// outputs compared by cosine with a learned temperature.
class HybridModel {
 public:
  static constexpr double kInitialTemperature = 5.0;
  static constexpr double kMinTemperature = 1e-3;

  HybridModel() = default;
  HybridModel(HybridShape shape, Rng& rng);

  const HybridShape& shape() const { return shape_; }
  double temperature() const { return tau_(0, 0); }
  const nn::DenseStack& tower() const { return tower_; }
  nn::DenseStack& tower() { return tower_; }
  Mat& gate_weight() { return gate_w_; }
  Mat& gate_bias() { return gate_b_; }

  /// Gate scores, -infinity for absent groups.
  Vec attention_scores(const FeatureBundle& b) const;
  /// Softmax of the scores; zero on absent groups.
  Vec attention(const FeatureBundle& b) const;
  /// Gated concatenation for explicit gate weights: group g scaled by
  /// 4 * weight_g, absent groups zero.
  Vec gated_input(const FeatureBundle& b, const Vec& weights) const;
  /// Unit-length representation.
  Vec represent(const FeatureBundle& b) const;
  Vec represent_with_weights(const FeatureBundle& b, const Vec& weights) const;
  Mat represent_all(const std::vector<const FeatureBundle*>& bundles) const;

  struct PairRef {
    const FeatureBundle* a;
    const FeatureBundle* b;
    bool positive;
  };
  /// Mean binary cross-entropy of sigmoid(tau * cos(r_a, r_b)); gradients
  /// accumulate into grads in parameters() order.
  double loss_and_grad(const std::vector<PairRef>& pairs, std::vector<Mat>* grads) const;

  /// Gate weight, gate bias, tower layers, temperature.
  std::vector<Mat*> parameters();
  std::vector<const Mat*> parameters() const;
  void clamp_temperature();

  void save(const fs::path& dir) const;
  static HybridModel load(const fs::path& dir);

 private:
  struct Forward {
    Mat input;  // D x n
    std::vector<nn::DenseCache> caches;
    Mat raw;    // tower output
    Mat rep;    // normalized
    Vec norms;
    std::vector<Vec> weights;
  };
  Forward forward(const std::vector<const FeatureBundle*>& bundles) const;

  HybridShape shape_;
  Mat gate_w_;  // kNumGroups x 1
  Mat gate_b_;  // kNumGroups x 1
  nn::DenseStack tower_;
  Mat tau_;  // 1 x 1
};

/// Cosine of two unit vectors.
double score(const Vec& a, const Vec& b);

struct HybridOptions {
  int epochs = 10;
  double step = 0.05;
  double momentum = 0.9;
  int batch = 64;
  std::uint64_t seed = 0;
  // Probability of hiding the behaviour group of a training bundle so the
  // gate and tower also learn the cold-start input pattern.
  double cf_dropout = 0.3;
  HybridShape shape;
};

struct HybridFitResult {
  HybridModel model;
  std::vector<double> loss_history;  // index 0 before training, then per epoch
};

HybridFitResult hybrid_fit(const std::unordered_map<std::string, FeatureBundle>& bundles,
                           const std::vector<PairExample>& pairs, const HybridOptions& opts);

}  // namespace hybridrec
