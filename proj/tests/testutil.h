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

// Shared helpers for the unit tests.

#include <cstdlib>
#include <string>
#include <vector>
#include <unistd.h>

#include "hybridrec/common.h"

namespace testutil {

namespace fs = std::filesystem;

// Fresh scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("hybridrec-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)}); }

inline hybridrec::Mat random_mat(hybridrec::Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  hybridrec::Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

// Largest elementwise relative error between analytic gradients and central
// finite differences of `loss` over every parameter entry.
template <typename Loss>
double max_gradient_error(const std::vector<hybridrec::Mat*>& params, const std::vector<hybridrec::Mat>& analytic,
                          Loss&& loss, double eps = 1e-6) {
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    hybridrec::Mat& m = *params[p];
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      const double orig = m.data()[k];
      m.data()[k] = orig + eps;
      const double up = loss();
      m.data()[k] = orig - eps;
      const double down = loss();
      m.data()[k] = orig;
      const double numeric = (up - down) / (2 * eps);
      const double a = analytic[p].data()[k];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace testutil
