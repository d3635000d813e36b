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

#include <cmath>
#include <fstream>

#include "doctest.h"
#include "hybridrec/common.h"
#include "hybridrec/embedding_table.h"
#include "testutil.h"

using namespace hybridrec;

TEST_CASE("rng sequences are reproducible and uniform draws stay in range") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  Rng r(1);
  std::array<int, 7> counts{};
  for (int i = 0; i < 70000; ++i) ++counts[r.below(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("normal draws have unit moments") {
  Rng r(9);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("categorical follows the weights and never picks zero weight") {
  Rng r(3);
  const std::vector<double> w = {1.0, 0.0, 3.0};
  std::array<int, 3> counts{};
  for (int i = 0; i < 40000; ++i) ++counts[r.categorical(w)];
  CHECK(counts[1] == 0);
  CHECK(std::abs(counts[2] / 40000.0 - 0.75) < 0.01);
}

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("MAT0 round trip keeps float32 values and the byte layout") {
  testutil::TempDir dir("mat");
  Mat m(2, 3);
  m << 1.0, -2.5, 0.125, 3.0, 1e-3, 7.0;
  write_mat0(dir / "m.mat", m);
  const std::string bytes = read_file(dir / "m.mat");
  REQUIRE(bytes.size() == 4 + 4 + 4 + 6 * 4);
  CHECK(bytes.substr(0, 4) == "MAT0");
  CHECK(static_cast<unsigned char>(bytes[4]) == 2);  // rows, little-endian
  CHECK(static_cast<unsigned char>(bytes[8]) == 3);  // cols
  float second = 0;
  std::memcpy(&second, bytes.data() + 12 + 4, 4);
  CHECK(second == -2.5f);
  const Mat back = read_mat0(dir / "m.mat");
  REQUIRE(back.rows() == 2);
  REQUIRE(back.cols() == 3);
  for (Eigen::Index i = 0; i < m.size(); ++i) CHECK(back.data()[i] == static_cast<double>(static_cast<float>(m.data()[i])));
}

TEST_CASE("MAT0 rejects bad magic and truncated files") {
  testutil::TempDir dir("mat");
  write_file(dir / "bad.mat", "MATX\x01\0\0\0\x01\0\0\0\0\0\0\0");
  CHECK_THROWS_AS(read_mat0(dir / "bad.mat"), Error);
  write_mat0(dir / "ok.mat", Mat::Ones(3, 3));
  std::string bytes = read_file(dir / "ok.mat");
  write_file(dir / "short.mat", bytes.substr(0, bytes.size() - 2));
  CHECK_THROWS_AS(read_mat0(dir / "short.mat"), Error);
  CHECK_THROWS_AS(read_mat0(dir / "missing.mat"), Error);
}

TEST_CASE("manifest preserves order and typed access") {
  testutil::TempDir dir("man");
  Manifest m;
  m.set("kind", "als");
  m.set("rank", std::int64_t{100});
  m.set_real("reg", 0.01);
  m.write(dir / "manifest");
  const Manifest r = Manifest::read(dir / "manifest");
  REQUIRE(r.entries().size() == 3);
  CHECK(r.entries()[0].first == "kind");
  CHECK(r.get_int("rank") == 100);
  CHECK(r.get_real("reg") == 0.01);
  CHECK_FALSE(r.has("missing"));
  CHECK_THROWS_AS(r.get("missing"), Error);
  CHECK_THROWS_AS(r.get_int("kind"), Error);
  write_file(dir / "broken", "novalue\n");
  CHECK_THROWS_AS(Manifest::read(dir / "broken"), Error);
}

TEST_CASE("format_real round-trips doubles") {
  Rng r(5);
  for (int i = 0; i < 1000; ++i) {
    const double v = r.normal() * std::pow(10.0, r.uniform(-20, 20));
    CHECK(std::stod(format_real(v)) == v);
  }
}

TEST_CASE("check_finite flags NaN and infinity") {
  Mat m = Mat::Zero(2, 2);
  CHECK_NOTHROW(check_finite(m, "m"));
  m(1, 1) = std::nan("");
  CHECK_THROWS_AS(check_finite(m, "m"), Error);
  m(1, 1) = INFINITY;
  CHECK_THROWS_AS(check_finite(m, "m"), Error);
}

TEST_CASE("utc_day uses calendar days") {
  CHECK(utc_day(1704067200) == utc_day(1704067200 + 86399));
  CHECK(utc_day(1704067200) + 1 == utc_day(1704067200 + 86400));
}

TEST_CASE("embedding table lookup and persistence") {
  testutil::TempDir dir("emb");
  Mat v(2, 3);
  v << 1, 2, 3, 4, 5, 6;
  const EmbeddingTable t({"x", "y"}, v);
  CHECK(t.size() == 2);
  CHECK(t.dim() == 3);
  CHECK(t.get("y")->isApprox(Vec((Vec(3) << 4, 5, 6).finished())));
  CHECK_FALSE(t.get("z").has_value());
  t.save(dir.path());
  const EmbeddingTable back = EmbeddingTable::load(dir.path());
  CHECK(back.ids() == t.ids());
  CHECK(back.vectors() == t.vectors());
  CHECK_THROWS_AS(EmbeddingTable({"x", "x"}, v), Error);
  CHECK_THROWS_AS(EmbeddingTable({"x"}, v), Error);
}
