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

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hybridrec/common.h"

namespace hybridrec {

/// Id-keyed dense vectors, one row per id.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::vector<std::string> ids, Mat vectors);

  std::size_t size() const { return ids_.size(); }
  Eigen::Index dim() const { return vectors_.cols(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const Mat& vectors() const { return vectors_; }

  std::optional<std::size_t> find(const std::string& id) const;
  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  Vec row(std::size_t i) const { return vectors_.row(static_cast<Eigen::Index>(i)).transpose(); }
  std::optional<Vec> get(const std::string& id) const;

  /// `ids.txt` plus `vectors.mat` inside dir.
  void save(const fs::path& dir) const;
  static EmbeddingTable load(const fs::path& dir);

 private:
  std::vector<std::string> ids_;
  Mat vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace hybridrec
