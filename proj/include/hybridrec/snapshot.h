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

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hybridrec/datamodel.h"
#include "hybridrec/embedding_table.h"

namespace hybridrec {

inline constexpr double kUnitNormTolerance = 1e-6;
inline constexpr int kDefaultRecommendations = 6;

/// Immutable serving index: unit-length item representations plus active
/// flags. Values are held at float32 precision, the precision they are
/// persisted with.
class Snapshot {
 public:
  Snapshot(std::string id, std::vector<std::string> ids, const Mat& representations, std::vector<bool> active);

  const std::string& id() const { return id_; }
  std::size_t size() const { return ids_.size(); }
  Eigen::Index dim() const { return reps_.cols(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const RowMat& representations() const { return reps_; }
  bool active(std::size_t i) const { return active_[i]; }
  std::optional<std::size_t> find(const std::string& item_id) const;

  void save(const fs::path& dir) const;
  static Snapshot load(const fs::path& dir);

 private:
  std::string id_;
  std::vector<std::string> ids_;
  RowMat reps_;
  std::vector<bool> active_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Rows in the order of the representation table; active flags from the ads.
Snapshot build_index(std::string snapshot_id, const EmbeddingTable& representations, const AdCorpus& ads);

struct Recommendation {
  std::string item_id;
  double score = 0.0;
};

/// Exact top-k by dot product with the query row, excluding the query and
/// inactive items; descending score, ties by ascending item id. Returns every
/// eligible item when fewer than k exist.
std::vector<Recommendation> recommend(const Snapshot& snapshot, const std::string& query_item,
                                      int k = kDefaultRecommendations);

/// Holds the served snapshot; readers take a reference-counted handle, the
/// refresh path replaces it atomically.
class SnapshotHolder {
 public:
  SnapshotHolder() = default;
  explicit SnapshotHolder(std::shared_ptr<const Snapshot> s) : current_(std::move(s)) {}

  std::shared_ptr<const Snapshot> get() const { return std::atomic_load(&current_); }
  void set(std::shared_ptr<const Snapshot> s) { std::atomic_store(&current_, std::move(s)); }

 private:
  std::shared_ptr<const Snapshot> current_;
};

/// Accepts either a snapshot directory or a refresh output directory (whose
/// CURRENT file names the served snapshot).
fs::path resolve_snapshot_dir(const fs::path& dir);

}  // namespace hybridrec
