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

#include "hybridrec/mf.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <thread>

namespace hybridrec {

InteractionMatrix::InteractionMatrix(std::vector<std::string> row_ids, std::vector<std::string> col_ids,
                                     std::vector<MatrixCell> cells)
    : row_ids_(std::move(row_ids)), col_ids_(std::move(col_ids)), cells_(std::move(cells)) {
  for (std::size_t i = 0; i < row_ids_.size(); ++i) {
    if (!row_index_.emplace(row_ids_[i], static_cast<std::uint32_t>(i)).second) {
      throw Error("interaction matrix: duplicate row id " + row_ids_[i]);
    }
  }
  for (std::size_t i = 0; i < col_ids_.size(); ++i) {
    if (!col_index_.emplace(col_ids_[i], static_cast<std::uint32_t>(i)).second) {
      throw Error("interaction matrix: duplicate column id " + col_ids_[i]);
    }
  }
  std::sort(cells_.begin(), cells_.end(), [](const MatrixCell& a, const MatrixCell& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const auto& c = cells_[i];
    if (c.row >= row_ids_.size() || c.col >= col_ids_.size()) throw Error("interaction matrix: cell out of range");
    if (!(c.value > 0.0) || !std::isfinite(c.value)) throw Error("interaction matrix: confidence must be positive");
    if (i > 0 && cells_[i - 1].row == c.row && cells_[i - 1].col == c.col) {
      throw Error("interaction matrix: duplicate cell (" + row_ids_[c.row] + ", " + col_ids_[c.col] + ")");
    }
  }
  row_offsets_.assign(row_ids_.size() + 1, 0);
  for (const auto& c : cells_) ++row_offsets_[c.row + 1];
  for (std::size_t r = 0; r < row_ids_.size(); ++r) row_offsets_[r + 1] += row_offsets_[r];

  by_col_ = cells_;
  std::stable_sort(by_col_.begin(), by_col_.end(),
                   [](const MatrixCell& a, const MatrixCell& b) { return a.col < b.col; });
  col_offsets_.assign(col_ids_.size() + 1, 0);
  for (const auto& c : by_col_) ++col_offsets_[c.col + 1];
  for (std::size_t k = 0; k < col_ids_.size(); ++k) col_offsets_[k + 1] += col_offsets_[k];
}

std::span<const MatrixCell> InteractionMatrix::row_cells(std::size_t r) const {
  return {cells_.data() + row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]};
}

std::span<const MatrixCell> InteractionMatrix::col_cells(std::size_t c) const {
  return {by_col_.data() + col_offsets_[c], col_offsets_[c + 1] - col_offsets_[c]};
}

std::optional<double> InteractionMatrix::value(const std::string& row_id, const std::string& col_id) const {
  auto r = row_index_.find(row_id);
  auto c = col_index_.find(col_id);
  if (r == row_index_.end() || c == col_index_.end()) return std::nullopt;
  for (const auto& cell : row_cells(r->second)) {
    if (cell.col == c->second) return cell.value;
  }
  return std::nullopt;
}

namespace {

InteractionMatrix matrix_from_pairs(const std::map<std::pair<std::string, std::string>, double>& sums) {
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  for (const auto& [key, v] : sums) {
    rows.push_back(key.first);
    cols.push_back(key.second);
  }
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  auto pos = [](const std::vector<std::string>& v, const std::string& s) {
    return static_cast<std::uint32_t>(std::lower_bound(v.begin(), v.end(), s) - v.begin());
  };
  std::vector<MatrixCell> cells;
  cells.reserve(sums.size());
  for (const auto& [key, v] : sums) cells.push_back({pos(rows, key.first), pos(cols, key.second), v});
  return InteractionMatrix(std::move(rows), std::move(cols), std::move(cells));
}

}  // namespace

InteractionMatrix build_matrix(const EventLog& events, const SignalWeightConfig& cfg) {
  if (events.empty()) throw Error("build_matrix: empty event log, nothing to factorize");
  std::map<std::pair<std::string, std::string>, double> sums;
  for (const auto& e : events) sums[{e.user_id, e.item_id}] += cfg.weight(e.signal);
  return matrix_from_pairs(sums);
}

Vec solve_factor_row(const Mat& fixed, const Mat& fixed_gram, std::span<const MatrixCell> cells,
                     bool cells_index_cols, double alpha, double reg) {
  const Eigen::Index k = fixed.cols();
  Mat a = fixed_gram;
  a.diagonal().array() += reg;
  Vec b = Vec::Zero(k);
  for (const auto& cell : cells) {
    const auto j = static_cast<Eigen::Index>(cells_index_cols ? cell.col : cell.row);
    const double extra = alpha * cell.value;  // c - 1
    const auto y = fixed.row(j);
    a.noalias() += extra * y.transpose() * y;
    b.noalias() += (1.0 + extra) * y.transpose();
  }
  Eigen::LLT<Mat> llt(a);
  if (llt.info() != Eigen::Success) throw Error("als: normal equations not positive definite");
  Vec x = llt.solve(b);
  if (!x.allFinite()) throw Error("als: non-finite factor after solve");
  return x;
}

namespace {

// Solves every row of `target` against `fixed`. Rows are split into
// contiguous chunks; each solve reads only `fixed` and writes only its row.
void half_sweep(const InteractionMatrix& m, bool solve_rows, const Mat& fixed, Mat& target,
                double alpha, double reg, int threads) {
  const Mat gram = fixed.transpose() * fixed;
  const auto n = static_cast<std::size_t>(target.rows());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const auto cells = solve_rows ? m.row_cells(r) : m.col_cells(r);
      target.row(static_cast<Eigen::Index>(r)) =
          solve_factor_row(fixed, gram, cells, solve_rows, alpha, reg).transpose();
    }
  };
  if (threads <= 1 || n < 2) {
    work(0, n);
    return;
  }
  const auto t = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::jthread> pool;
  std::vector<std::exception_ptr> errors(t);
  for (std::size_t i = 0; i < t; ++i) {
    pool.emplace_back([&, i] {
      try {
        work(n * i / t, n * (i + 1) / t);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  pool.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

FactorModel als_fit(const InteractionMatrix& m, const AlsOptions& opts) {
  if (m.nnz() == 0) throw Error("als_fit: empty matrix");
  if (opts.rank < 1) throw Error("als_fit: rank must be >= 1");
  if (opts.iters < 1) throw Error("als_fit: iters must be >= 1");
  if (!(opts.reg > 0.0)) throw Error("als_fit: reg must be positive");
  if (!(opts.alpha >= 0.0)) throw Error("als_fit: alpha must be non-negative");
  if (static_cast<std::size_t>(opts.rank) > std::min(m.rows(), m.cols())) {
    std::clog << "warning: als rank " << opts.rank << " exceeds min(rows, cols) = "
              << std::min(m.rows(), m.cols()) << "\n";
  }

  FactorModel model;
  model.rank = opts.rank;
  model.reg = opts.reg;
  model.alpha = opts.alpha;
  model.seed = opts.seed;
  model.row_ids = m.row_ids();
  model.col_ids = m.col_ids();

  Rng rng(opts.seed);
  const double scale = 0.1 / std::sqrt(static_cast<double>(opts.rank));
  auto init = [&](Eigen::Index rows) {
    Mat f(rows, opts.rank);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < opts.rank; ++c) f(r, c) = rng.uniform(-scale, scale);
    }
    return f;
  };
  model.row_factors = init(static_cast<Eigen::Index>(m.rows()));
  model.col_factors = init(static_cast<Eigen::Index>(m.cols()));

  for (int it = 0; it < opts.iters; ++it) {
    half_sweep(m, true, model.col_factors, model.row_factors, opts.alpha, opts.reg, opts.threads);
    if (opts.trace) opts.trace(2 * it, objective(model, m));
    half_sweep(m, false, model.row_factors, model.col_factors, opts.alpha, opts.reg, opts.threads);
    if (opts.trace) opts.trace(2 * it + 1, objective(model, m));
  }
  check_finite(model.row_factors, "als row factors");
  check_finite(model.col_factors, "als column factors");
  return model;
}

double objective(const FactorModel& model, const InteractionMatrix& m) {
  if (static_cast<std::size_t>(model.row_factors.rows()) != m.rows() ||
      static_cast<std::size_t>(model.col_factors.rows()) != m.cols() ||
      model.row_factors.cols() != model.col_factors.cols()) {
    throw Error("objective: model and matrix dimensions differ");
  }
  const Mat& x = model.row_factors;
  const Mat& y = model.col_factors;
  // Unit-confidence zero-preference term over every pair, then the observed
  // cells corrected to their confidence and preference.
  double total = ((x.transpose() * x).cwiseProduct(y.transpose() * y)).sum();
  for (const auto& cell : m.cells()) {
    const double s = x.row(cell.row).dot(y.row(cell.col));
    const double c = 1.0 + model.alpha * cell.value;
    total += c * (1.0 - s) * (1.0 - s) - s * s;
  }
  total += model.reg * (x.squaredNorm() + y.squaredNorm());
  return total;
}

void FactorModel::save(const fs::path& dir, const std::string& kind) const {
  fs::create_directories(dir);
  Manifest man;
  man.set("kind", kind);
  man.set("rank", rank);
  man.set_real("reg", reg);
  man.set_real("alpha", alpha);
  man.set("seed", std::to_string(seed));
  man.set("rows", static_cast<std::int64_t>(row_factors.rows()));
  man.set("cols", static_cast<std::int64_t>(col_factors.rows()));
  man.write(dir / "manifest");
  write_mat0(dir / "row_factors.mat", row_factors);
  write_mat0(dir / "col_factors.mat", col_factors);
  write_lines(dir / "row_ids.txt", row_ids);
  write_lines(dir / "col_ids.txt", col_ids);
}

FactorModel FactorModel::load(const fs::path& dir) {
  const Manifest man = Manifest::read(dir / "manifest");
  FactorModel m;
  m.rank = static_cast<int>(man.get_int("rank"));
  m.reg = man.get_real("reg");
  m.alpha = man.get_real("alpha");
  m.seed = std::stoull(man.get("seed"));
  m.row_factors = read_mat0(dir / "row_factors.mat");
  m.col_factors = read_mat0(dir / "col_factors.mat");
  m.row_ids = read_lines(dir / "row_ids.txt");
  m.col_ids = read_lines(dir / "col_ids.txt");
  if (m.row_factors.rows() != man.get_int("rows") || m.col_factors.rows() != man.get_int("cols") ||
      static_cast<Eigen::Index>(m.row_ids.size()) != m.row_factors.rows() ||
      static_cast<Eigen::Index>(m.col_ids.size()) != m.col_factors.rows() ||
      m.row_factors.cols() != m.rank || m.col_factors.cols() != m.rank) {
    throw Error("factor model in " + dir.string() + " is inconsistent with its manifest");
  }
  return m;
}

EmbeddingTable location_fit(const EventLog& events, const AdCorpus& ads, const SignalWeightConfig& cfg,
                            AlsOptions opts) {
  if (events.empty()) throw Error("location_fit: empty event log, nothing to factorize");
  std::vector<std::string> unknown;
  std::map<std::pair<std::string, std::string>, double> sums;
  for (const auto& e : events) {
    const Ad* ad = ads.find(e.item_id);
    if (!ad) {
      if (std::find(unknown.begin(), unknown.end(), e.item_id) == unknown.end()) unknown.push_back(e.item_id);
      continue;
    }
    sums[{e.user_id, ad->postcode}] += cfg.weight(e.signal);
  }
  if (!unknown.empty()) {
    std::string msg = "location_fit: events reference unknown items:";
    for (const auto& id : unknown) msg += " " + id;
    throw Error(msg);
  }
  const InteractionMatrix m = matrix_from_pairs(sums);
  return als_fit(m, opts).col_table();
}

}  // namespace hybridrec
