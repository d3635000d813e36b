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

#include "hybridrec/embedding_table.h"

namespace hybridrec {

EmbeddingTable::EmbeddingTable(std::vector<std::string> ids, Mat vectors)
    : ids_(std::move(ids)), vectors_(std::move(vectors)) {
  if (static_cast<Eigen::Index>(ids_.size()) != vectors_.rows()) {
    throw Error("embedding table: " + std::to_string(ids_.size()) + " ids for " +
                std::to_string(vectors_.rows()) + " rows");
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) throw Error("embedding table: duplicate id " + ids_[i]);
  }
}

std::optional<std::size_t> EmbeddingTable::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<Vec> EmbeddingTable::get(const std::string& id) const {
  if (auto i = find(id)) return row(*i);
  return std::nullopt;
}

void EmbeddingTable::save(const fs::path& dir) const {
  fs::create_directories(dir);
  write_lines(dir / "ids.txt", ids_);
  write_mat0(dir / "vectors.mat", vectors_);
}

EmbeddingTable EmbeddingTable::load(const fs::path& dir) {
  return EmbeddingTable(read_lines(dir / "ids.txt"), read_mat0(dir / "vectors.mat"));
}

}  // namespace hybridrec
