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

#include "hybridrec/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

namespace hybridrec {

PairSplit split_pairs(const std::vector<PairExample>& positives, double holdout_fraction, std::uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw Error("split_pairs: holdout fraction must lie in (0, 1)");
  }
  const std::size_t n = positives.size();
  if (n < 2) throw Error("split_pairs: need at least two pairs to populate both sides");
  auto n_test = static_cast<std::size_t>(std::floor(holdout_fraction * static_cast<double>(n)));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<bool> is_test(n, false);
  for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;
  PairSplit split;
  for (std::size_t i = 0; i < n; ++i) (is_test[i] ? split.test : split.train).push_back(positives[i]);
  return split;
}

namespace {

// Rank of the true partner (1-based) within its candidate set.
std::size_t partner_rank(const PairScorer& scorer, const PairExample& pair,
                         const std::vector<std::string>& universe, const HitRateOptions& opts) {
  Rng rng(mix64(opts.seed, fnv1a64(pair.item_b, fnv1a64(pair.item_a) ^ 0x5bd1e995ULL)));
  std::vector<std::size_t> pool;
  pool.reserve(universe.size());
  for (std::size_t i = 0; i < universe.size(); ++i) {
    if (universe[i] != pair.item_a && universe[i] != pair.item_b) pool.push_back(i);
  }
  const auto need = static_cast<std::size_t>(opts.n_distractors);
  if (pool.size() < need) {
    throw Error("hit_rate: universe has " + std::to_string(pool.size()) + " eligible distractors, " +
                std::to_string(need) + " requested");
  }
  for (std::size_t i = 0; i < need; ++i) {
    std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
  }
  const double target = scorer(pair.item_a, pair.item_b);
  std::size_t rank = 1;
  for (std::size_t i = 0; i < need; ++i) {
    const std::string& d = universe[pool[i]];
    const double s = scorer(pair.item_a, d);
    if (s > target || (s == target && d < pair.item_b)) ++rank;
  }
  return rank;
}

}  // namespace

std::vector<double> hit_rates(const PairScorer& scorer, const std::vector<PairExample>& test,
                              const std::vector<int>& ns, const std::vector<std::string>& universe,
                              const HitRateOptions& opts) {
  if (test.empty()) throw Error("hit_rate: empty test set");
  if (opts.n_distractors < 0) throw Error("hit_rate: negative distractor count");
  for (int n : ns) {
    if (n < 1) throw Error("hit_rate: n must be >= 1");
  }
  std::vector<std::size_t> ranks(test.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) ranks[i] = partner_rank(scorer, test[i], universe, opts);
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, opts.threads)), test.size());
  if (threads <= 1) {
    work(0, test.size());
  } else {
    std::vector<std::exception_ptr> errors(threads);
    {
      std::vector<std::jthread> pool;
      for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
          try {
            work(test.size() * t / threads, test.size() * (t + 1) / threads);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  std::vector<double> out;
  for (int n : ns) {
    const auto hits = std::count_if(ranks.begin(), ranks.end(), [n](std::size_t r) { return r <= static_cast<std::size_t>(n); });
    out.push_back(static_cast<double>(hits) / static_cast<double>(test.size()));
  }
  return out;
}

double hit_rate(const PairScorer& scorer, const std::vector<PairExample>& test, int n,
                const std::vector<std::string>& universe, const HitRateOptions& opts) {
  return hit_rates(scorer, test, {n}, universe, opts).front();
}

double delta_ctr(double ctr_a, double ctr_b) {
  if (!(ctr_a > 0.0)) throw Error("delta_ctr: baseline CTR must be positive");
  return (ctr_b - ctr_a) / ctr_a;
}

std::array<double, kNumGroups> feature_importance(const HybridModel& model) {
  const Mat& w = model.tower().layers().front().weight;
  const auto& shape = model.shape();
  std::array<double, kNumGroups> out{};
  double total = 0.0;
  for (std::size_t g = 0; g < kNumGroups; ++g) {
    out[g] = w.middleCols(shape.group_offset(g), shape.group_dims[g]).colwise().norm().sum();
    total += out[g];
  }
  for (auto& v : out) v = total > 0.0 ? v / total : 1.0 / static_cast<double>(kNumGroups);
  return out;
}

namespace {

double hashed_unit(std::uint64_t salt, const std::string& a, const std::string& b) {
  const std::uint64_t h = mix64(salt, fnv1a64(b, fnv1a64(a) * 31));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace

PairScorer embedding_scorer(const EmbeddingTable& table, std::uint64_t salt) {
  // Table rows normalized once; missing items fall back to hashed scores.
  Mat unit = table.vectors();
  for (Eigen::Index r = 0; r < unit.rows(); ++r) {
    const double n = unit.row(r).norm();
    if (n > 0.0) unit.row(r) /= n;
  }
  auto shared = std::make_shared<const std::pair<EmbeddingTable, Mat>>(table, std::move(unit));
  return [shared, salt](const std::string& a, const std::string& b) {
    const auto ia = shared->first.find(a);
    const auto ib = shared->first.find(b);
    if (!ia || !ib) return 2.0 * hashed_unit(salt, a, b) - 1.0;
    return shared->second.row(static_cast<Eigen::Index>(*ia)).dot(shared->second.row(static_cast<Eigen::Index>(*ib)));
  };
}

PairScorer random_scorer(std::uint64_t salt) {
  return [salt](const std::string& a, const std::string& b) { return hashed_unit(salt, a, b); };
}

std::string EvalReport::summary() const {
  std::string s = "model: " + model_id + "\n";
  s += "test pairs: " + std::to_string(test_pairs) + "\n";
  s += "candidate set size: " + std::to_string(candidate_set_size) + "\n";
  s += "seed: " + std::to_string(seed) + "\n";
  char buf[64];
  for (const auto& [n, hr] : hit_rates) {
    std::snprintf(buf, sizeof(buf), "HR@%d: %.4f\n", n, hr);
    s += buf;
  }
  if (importance) {
    s += "feature group importance:\n";
    for (std::size_t g = 0; g < kNumGroups; ++g) {
      std::snprintf(buf, sizeof(buf), "  %-9s %.4f\n", std::string(group_name(g)).c_str(), (*importance)[g]);
      s += buf;
    }
  }
  return s;
}

Manifest EvalReport::to_manifest() const {
  Manifest m;
  m.set("model", model_id);
  m.set("test_pairs", static_cast<std::int64_t>(test_pairs));
  m.set("candidate_set_size", candidate_set_size);
  m.set("seed", std::to_string(seed));
  for (const auto& [n, hr] : hit_rates) m.set_real("hr@" + std::to_string(n), hr);
  if (importance) {
    for (std::size_t g = 0; g < kNumGroups; ++g) {
      m.set_real("importance." + std::string(group_name(g)), (*importance)[g]);
    }
  }
  return m;
}

void EvalReport::write(const fs::path& text_path, const fs::path& kv_path) const {
  write_file(text_path, summary());
  to_manifest().write(kv_path);
}

}  // namespace hybridrec
