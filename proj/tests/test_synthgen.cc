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

#include <map>
#include <set>

#include "doctest.h"
#include "hybridrec/synthgen.h"
#include "testutil.h"

using namespace hybridrec;

namespace {

SynthConfig small_config() {
  SynthConfig c;
  c.n_users = 120;
  c.n_items = 100;
  c.image_dim = 64;
  c.days = 10;
  return c;
}

double cosine(const Vec& a, const Vec& b) { return a.dot(b) / (a.norm() * b.norm()); }

}  // namespace

TEST_CASE("exactly the configured fraction of items is cold") {
  SynthConfig c = small_config();
  c.cold_start_fraction = 0.2;
  const auto d = generate(c);
  std::set<std::string> with_events;
  for (const auto& e : d.events) with_events.insert(e.item_id);
  std::size_t without = 0;
  for (const auto& ad : d.ads) without += with_events.count(ad.item_id) ? 0 : 1;
  CHECK(without == 20);
  std::size_t cold = 0;
  for (std::size_t i = 0; i < d.ads.size(); ++i) {
    if (d.truth.item_cold[i]) {
      ++cold;
      CHECK_FALSE(with_events.count(d.ads.ads()[i].item_id));
    }
  }
  CHECK(cold == 20);
}

TEST_CASE("generation is byte-for-byte deterministic") {
  const SynthConfig c = small_config();
  testutil::TempDir a("syn"), b("syn");
  write_synth(a.path(), generate(c));
  write_synth(b.path(), generate(c));
  for (const char* f : {"ads.tsv", "events.tsv", "holdout_events.tsv", "images.imgf"}) {
    CHECK(read_file(a / f) == read_file(b / f));
  }
  SynthConfig other = c;
  other.seed = c.seed + 1;
  testutil::TempDir o("syn");
  write_synth(o.path(), generate(other));
  CHECK(read_file(a / "events.tsv") != read_file(o / "events.tsv"));
}

TEST_CASE("zero conversion probabilities leave only upper-funnel signals") {
  SynthConfig c = small_config();
  for (SignalKind k : kAllSignals) {
    if (is_conversion(k)) c.funnel[static_cast<std::size_t>(k)] = 0.0;
  }
  const auto d = generate(c);
  REQUIRE_FALSE(d.events.empty());
  for (const auto& e : d.events) CHECK_FALSE(is_conversion(e.signal));
}

TEST_CASE("referential integrity") {
  const auto d = generate(small_config());
  for (const auto& e : d.events) CHECK(d.ads.contains(e.item_id));
  for (const auto& e : d.holdout_events) CHECK(d.ads.contains(e.item_id));
  for (const auto& ad : d.ads) CHECK(d.images.find(ad.item_id).has_value());
  CHECK(d.images.dim() == 64);
  for (std::size_t i = 1; i < d.events.size(); ++i) CHECK(d.events[i - 1].ts <= d.events[i].ts);
  const auto end = small_config().train_end();
  for (const auto& e : d.events) CHECK(e.ts < end);
  for (const auto& e : d.holdout_events) CHECK(e.ts >= end);
}

TEST_CASE("signal frequencies match the funnel within three standard errors") {
  SynthConfig c;
  c.n_users = 600;
  c.n_items = 300;
  c.image_dim = 8;
  const auto d = generate(c);
  const double n = static_cast<double>(d.stats.funnel_trials);
  REQUIRE(n >= 1e4);
  std::array<std::int64_t, kNumSignals> counted{};
  for (const auto& e : d.events) ++counted[static_cast<std::size_t>(e.signal)];
  counted[0] -= d.stats.coverage_events;
  for (std::size_t k = 0; k < kNumSignals; ++k) {
    CHECK(counted[k] == d.stats.funnel_counts[k]);
    const double p = c.funnel[k];
    const double freq = static_cast<double>(counted[k]) / n;
    const double se = std::sqrt(std::max(p * (1 - p), 1e-12) / n);
    CHECK(std::abs(freq - p) <= 3 * se + 1e-12);
  }
}

TEST_CASE("same-subcategory images are more similar") {
  SynthConfig c = small_config();
  c.image_dim = 256;
  const auto d = generate(c);
  double same = 0, cross = 0;
  int ns = 0, nc = 0;
  for (std::size_t i = 0; i < d.ads.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double s = cosine(d.images.row_d(i), d.images.row_d(j));
      if (d.truth.item_subcat[i] == d.truth.item_subcat[j]) {
        same += s;
        ++ns;
      } else {
        cross += s;
        ++nc;
      }
    }
  }
  REQUIRE(ns > 0);
  CHECK(same / ns > cross / nc);
}

TEST_CASE("topic vocabularies are disjoint per subcategory") {
  const auto d = generate(small_config());
  std::map<std::string, std::set<std::string>> owners;
  for (const auto& ad : d.ads) {
    std::string text = ad.title + " " + ad.description;
    std::string word;
    for (char ch : text + " ") {
      if (std::isalnum(static_cast<unsigned char>(ch))) {
        word += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      } else if (!word.empty()) {
        if (word[0] == 'w') owners[word].insert(ad.subcategory);
        word.clear();
      }
    }
  }
  REQUIRE_FALSE(owners.empty());
  for (const auto& [w, subs] : owners) CHECK(subs.size() == 1);
}

TEST_CASE("users prefer items near home") {
  SynthConfig c = small_config();
  c.n_location_clusters = 2;
  c.n_postcodes = 10;
  const auto d = generate(c);
  std::map<std::string, std::map<int, int>> per_user;
  std::map<std::string, std::size_t> row;
  for (std::size_t i = 0; i < d.ads.size(); ++i) row[d.ads.ads()[i].item_id] = i;
  for (const auto& e : d.events) ++per_user[e.user_id][d.truth.item_cluster[row[e.item_id]]];
  int concentrated = 0;
  for (const auto& [u, m] : per_user) {
    int total = 0, best = 0;
    for (const auto& [cl, n] : m) {
      total += n;
      best = std::max(best, n);
    }
    if (best >= 0.7 * total) ++concentrated;
  }
  CHECK(concentrated > 0.8 * static_cast<double>(per_user.size()));
}

TEST_CASE("config validation and file round trip") {
  SynthConfig c;
  c.n_users = 0;
  CHECK_THROWS_AS(generate(c), Error);
  c = SynthConfig();
  c.cold_start_fraction = 1.5;
  CHECK_THROWS_AS(generate(c), Error);
  c = SynthConfig();
  c.funnel[3] = -0.1;
  CHECK_THROWS_AS(c.validate(), Error);

  testutil::TempDir dir("cfg");
  SynthConfig s;
  s.n_users = 77;
  s.topic_purity = 0.6;
  s.seed = 123456789012345ULL;
  s.funnel[4] = 0.5;
  save_synth_config(dir / "s.cfg", s);
  const auto back = load_synth_config(dir / "s.cfg");
  CHECK(back.n_users == 77);
  CHECK(back.topic_purity == 0.6);
  CHECK(back.seed == 123456789012345ULL);
  CHECK(back.funnel == s.funnel);
  write_file(dir / "partial.cfg", "n_items=50\nfunnel.show_phone=0.5\n");
  const auto partial = load_synth_config(dir / "partial.cfg");
  CHECK(partial.n_items == 50);
  CHECK(partial.n_users == SynthConfig().n_users);
  CHECK(partial.funnel[static_cast<std::size_t>(SignalKind::kShowPhone)] == 0.5);
  write_file(dir / "bad.cfg", "n_itemz=50\n");
  CHECK_THROWS_AS(load_synth_config(dir / "bad.cfg"), Error);
}
