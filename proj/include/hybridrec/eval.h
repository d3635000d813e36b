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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hybridrec/embedding_table.h"
#include "hybridrec/hybrid.h"

namespace hybridrec {

using PairScorer = std::function<double(const std::string&, const std::string&)>;

struct PairSplit {
  std::vector<PairExample> train;
  std::vector<PairExample> test;
};

/// Test size is floor(fraction * n), at least 1 and at most n - 1.
PairSplit split_pairs(const std::vector<PairExample>& positives, double holdout_fraction, std::uint64_t seed);

struct HitRateOptions {
  int n_distractors = 100;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// For each test pair (a, b), ranks b among itself and n_distractors items
/// drawn uniformly from the universe minus {a, b}, by scorer(a, .) descending
/// with ties broken by ascending item id. The distractor draw of a pair
/// depends only on (seed, a, b).
std::vector<double> hit_rates(const PairScorer& scorer, const std::vector<PairExample>& test,
                              const std::vector<int>& ns, const std::vector<std::string>& universe,
                              const HitRateOptions& opts);
double hit_rate(const PairScorer& scorer, const std::vector<PairExample>& test, int n,
                const std::vector<std::string>& universe, const HitRateOptions& opts);

/// (ctr_b - ctr_a) / ctr_a.
double delta_ctr(double ctr_a, double ctr_b);

/// Per feature group, the summed Euclidean norms of the first tower layer's
/// input columns belonging to that group, normalized to sum to one.
std::array<double, kNumGroups> feature_importance(const HybridModel& model);

/// Cosine between table rows; items missing from the table get a
/// deterministic pseudo-random score in [-1, 1).
PairScorer embedding_scorer(const EmbeddingTable& table, std::uint64_t salt = 0);
/// Deterministic pseudo-random scores.
PairScorer random_scorer(std::uint64_t salt);

struct EvalReport {
  std::string model_id;
  std::vector<std::pair<int, double>> hit_rates;
  int candidate_set_size = 0;  // distractors + the true partner
  std::size_t test_pairs = 0;
  std::uint64_t seed = 0;
  std::optional<std::array<double, kNumGroups>> importance;

  std::string summary() const;
  Manifest to_manifest() const;
  void write(const fs::path& text_path, const fs::path& kv_path) const;
};

}  // namespace hybridrec
