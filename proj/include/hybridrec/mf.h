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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hybridrec/datamodel.h"
#include "hybridrec/embedding_table.h"

namespace hybridrec {

struct MatrixCell {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  double value = 0.0;
};

/// Sparse user x item (or user x postcode) confidence matrix. Row and column
/// ids are sorted lexicographically.
class InteractionMatrix {
 public:
  InteractionMatrix(std::vector<std::string> row_ids, std::vector<std::string> col_ids,
                    std::vector<MatrixCell> cells);

  std::size_t rows() const { return row_ids_.size(); }
  std::size_t cols() const { return col_ids_.size(); }
  std::size_t nnz() const { return cells_.size(); }
  const std::vector<std::string>& row_ids() const { return row_ids_; }
  const std::vector<std::string>& col_ids() const { return col_ids_; }

  // Cells sorted by (row, col).
  const std::vector<MatrixCell>& cells() const { return cells_; }
  std::span<const MatrixCell> row_cells(std::size_t r) const;
  // Cells of column c, as (row, value) entries.
  std::span<const MatrixCell> col_cells(std::size_t c) const;
  std::optional<double> value(const std::string& row_id, const std::string& col_id) const;

 private:
  std::vector<std::string> row_ids_;
  std::vector<std::string> col_ids_;
  std::vector<MatrixCell> cells_;
  std::vector<std::size_t> row_offsets_;
  std::vector<MatrixCell> by_col_;  // cells with row/col kept, sorted by (col, row)
  std::vector<std::size_t> col_offsets_;
  std::unordered_map<std::string, std::uint32_t> row_index_;
  std::unordered_map<std::string, std::uint32_t> col_index_;
};

/// confidence(u, i) = sum of signal weights over the events of (u, i).
InteractionMatrix build_matrix(const EventLog& events, const SignalWeightConfig& cfg);

struct AlsOptions {
  int rank = 100;
  double reg = 0.01;
  double alpha = 1.0;
  int iters = 15;
  std::uint64_t seed = 0;
  int threads = 1;
  // Called with (half-sweep index, objective) after every half-sweep when set.
  std::function<void(int, double)> trace;
};

struct FactorModel {
  int rank = 0;
  double reg = 0.0;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  Mat row_factors;  // n_rows x rank
  Mat col_factors;  // n_cols x rank
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;

  EmbeddingTable col_table() const { return EmbeddingTable(col_ids, col_factors); }

  void save(const fs::path& dir, const std::string& kind) const;
  static FactorModel load(const fs::path& dir);
};

/// Implicit-feedback ALS: preference 1 on observed cells, 0 elsewhere, with
/// confidence 1 + alpha * value on observed cells and 1 elsewhere.
FactorModel als_fit(const InteractionMatrix& m, const AlsOptions& opts);

/// sum over all (row, col) of c * (p - x.y)^2 + reg * (|X|^2 + |Y|^2).
double objective(const FactorModel& model, const InteractionMatrix& m);

/// Exact ridge solve of one row given the opposite factors and their gram
/// matrix.
Vec solve_factor_row(const Mat& fixed, const Mat& fixed_gram, std::span<const MatrixCell> cells,
                     bool cells_index_cols, double alpha, double reg);

/// Factorizes the user x postcode matrix obtained by mapping each event's item
/// to its ad's postcode and returns the postcode factors.
EmbeddingTable location_fit(const EventLog& events, const AdCorpus& ads, const SignalWeightConfig& cfg,
                            AlsOptions opts);

}  // namespace hybridrec

namespace hybridrec {

inline constexpr int kLocationRank = 10;

/// AlsOptions with the location-embedding rank.
inline AlsOptions location_als_options() {
  AlsOptions o;
  o.rank = kLocationRank;
  return o;
}

}  // namespace hybridrec
