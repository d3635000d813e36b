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

#include "hybridrec/snapshot.h"

#include <algorithm>
#include <cmath>

namespace hybridrec {

Snapshot::Snapshot(std::string id, std::vector<std::string> ids, const Mat& representations, std::vector<bool> active)
    : id_(std::move(id)), ids_(std::move(ids)), active_(std::move(active)) {
  if (static_cast<Eigen::Index>(ids_.size()) != representations.rows() || active_.size() != ids_.size()) {
    throw Error("snapshot: ids, representations and active flags differ in length");
  }
  if (id_.empty() || id_.find_first_of("/\n\t") != std::string::npos) throw Error("snapshot: invalid snapshot id");
  reps_ = representations.cast<float>().cast<double>();
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) throw Error("snapshot: duplicate item id " + ids_[i]);
    const double norm = reps_.row(static_cast<Eigen::Index>(i)).norm();
    if (!(std::abs(norm - 1.0) <= kUnitNormTolerance)) {
      throw Error("snapshot: representation of " + ids_[i] + " has norm " + format_real(norm) + ", expected 1");
    }
  }
}

std::optional<std::size_t> Snapshot::find(const std::string& item_id) const {
  auto it = index_.find(item_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Snapshot::save(const fs::path& dir) const {
  fs::create_directories(dir);
  Manifest m;
  m.set("snapshot_id", id_);
  m.set("items", static_cast<std::int64_t>(ids_.size()));
  m.set("dim", static_cast<std::int64_t>(reps_.cols()));
  m.write(dir / "index.manifest");
  write_mat0(dir / "index.mat", reps_);
  write_lines(dir / "ids.txt", ids_);
  std::vector<std::string> flags;
  flags.reserve(active_.size());
  for (bool a : active_) flags.emplace_back(a ? "1" : "0");
  write_lines(dir / "active.txt", flags);
}

Snapshot Snapshot::load(const fs::path& dir) {
  const Manifest m = Manifest::read(dir / "index.manifest");
  std::vector<bool> active;
  for (const auto& f : read_lines(dir / "active.txt")) {
    if (f != "0" && f != "1") throw Error("snapshot: bad active flag in " + dir.string());
    active.push_back(f == "1");
  }
  Snapshot s(m.get("snapshot_id"), read_lines(dir / "ids.txt"), read_mat0(dir / "index.mat"), std::move(active));
  if (static_cast<std::int64_t>(s.size()) != m.get_int("items") || s.dim() != m.get_int("dim")) {
    throw Error("snapshot in " + dir.string() + " is inconsistent with its manifest");
  }
  return s;
}

Snapshot build_index(std::string snapshot_id, const EmbeddingTable& representations, const AdCorpus& ads) {
  std::vector<bool> active;
  active.reserve(representations.size());
  for (const auto& id : representations.ids()) {
    const Ad* ad = ads.find(id);
    if (!ad) throw Error("build_index: representation for unknown item " + id);
    active.push_back(ad->active);
  }
  return Snapshot(std::move(snapshot_id), representations.ids(), representations.vectors(), std::move(active));
}

std::vector<Recommendation> recommend(const Snapshot& snapshot, const std::string& query_item, int k) {
  if (k < 1) throw Error("recommend: k must be >= 1");
  const auto q = snapshot.find(query_item);
  if (!q) throw Error("recommend: unknown item " + query_item);
  const RowMat& reps = snapshot.representations();
  const Eigen::Index dim = reps.cols();
  const double* query = reps.row(static_cast<Eigen::Index>(*q)).data();

  struct Scored {
    std::size_t row;
    double score;
  };
  std::vector<Scored> scored;
  scored.reserve(snapshot.size());
  for (std::size_t i = 0; i < snapshot.size(); ++i) {
    if (i == *q || !snapshot.active(i)) continue;
    const double* row = reps.row(static_cast<Eigen::Index>(i)).data();
    double s = 0.0;
    for (Eigen::Index d = 0; d < dim; ++d) s += row[d] * query[d];
    scored.push_back({i, s});
  }
  const auto& ids = snapshot.ids();
  auto better = [&](const Scored& a, const Scored& b) {
    return a.score != b.score ? a.score > b.score : ids[a.row] < ids[b.row];
  };
  const std::size_t take = std::min(scored.size(), static_cast<std::size_t>(k));
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(), better);
  std::vector<Recommendation> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back({ids[scored[i].row], scored[i].score});
  return out;
}

fs::path resolve_snapshot_dir(const fs::path& dir) {
  if (fs::exists(dir / "index.manifest")) return dir;
  if (fs::exists(dir / "CURRENT")) {
    const auto lines = read_lines(dir / "CURRENT");
    if (lines.empty() || lines.front().empty()) throw Error("empty CURRENT file in " + dir.string());
    return dir / lines.front();
  }
  throw Error("no snapshot found in " + dir.string());
}

}  // namespace hybridrec
