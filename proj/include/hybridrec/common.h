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
#include <filesystem>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace hybridrec {

namespace fs = std::filesystem;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr std::int64_t kSecondsPerDay = 86400;

// UTC calendar day number of a timestamp in seconds.
inline std::int64_t utc_day(std::int64_t ts) {
  return ts >= 0 ? ts / kSecondsPerDay : -((-ts + kSecondsPerDay - 1) / kSecondsPerDay);
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);
std::string hex64(std::uint64_t v);

/// Seeded generator with platform-independent derived distributions.
///
/// The engine is mt19937_64, whose output sequence is fixed by the standard;
/// the distribution helpers below are written out so that generated data is
/// identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }
  // Index drawn proportionally to non-negative weights.
  std::size_t categorical(std::span<const double> weights);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Persistence helpers shared by every model directory.

/// Row-major float32 matrix file: magic `MAT0`, u32 rows, u32 cols, data.
void write_mat0(const fs::path& path, const Mat& m);
Mat read_mat0(const fs::path& path);

void write_vec0(const fs::path& path, const Vec& v);
Vec read_vec0(const fs::path& path);

/// Ordered key=value text file.
class Manifest {
 public:
  void set(std::string key, std::string value);
  void set(std::string key, std::int64_t value) { set(std::move(key), std::to_string(value)); }
  void set_real(std::string key, double value);

  bool has(std::string_view key) const;
  const std::string& get(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  double get_real(std::string_view key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  void write(const fs::path& path) const;
  static Manifest read(const fs::path& path);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

void write_lines(const fs::path& path, const std::vector<std::string>& lines);
std::vector<std::string> read_lines(const fs::path& path);

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, std::string_view contents);
std::uint64_t hash_file(const fs::path& path);

// Shortest round-trippable decimal form.
std::string format_real(double v);

void check_finite(const Mat& m, std::string_view what);

}  // namespace hybridrec
