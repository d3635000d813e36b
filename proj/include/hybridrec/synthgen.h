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

#include <array>
#include <cstdint>
#include <vector>

#include "hybridrec/datamodel.h"

namespace hybridrec {

/// Parameters of the synthetic marketplace.
///
/// Every subcategory owns a disjoint topic vocabulary. Subcategories are
/// paired into interest profiles (a random matching), so users co-convert
/// across the two subcategories of a profile; that cross-subcategory link is
/// visible to behaviour models but not to text. Users also prefer items whose
/// postcode lies in their home location cluster.
struct SynthConfig {
  int n_users = 300;
  int n_items = 400;
  int n_categories = 4;
  int n_subcats_per_category = 3;
  int n_postcodes = 24;
  int n_location_clusters = 3;
  int vocab_size = 600;  // topic words across all subcategories
  int generic_vocab_size = 30;
  int title_len = 6;
  int desc_len = 16;
  int image_dim = 2048;
  int days = 20;
  int holdout_days = 2;
  std::uint64_t seed = 1;
  double cold_start_fraction = 0.2;
  double inactive_fraction = 0.05;

  // Per-interaction emission probability of each signal, in SignalKind order.
  std::array<double, kNumSignals> funnel = {1.0, 0.15, 0.03, 0.10, 0.25, 0.20, 0.05};

  double session_prob = 0.3;  // chance a user is active on a given day
  int session_min_items = 3;
  int session_max_items = 6;
  double explore_prob = 0.05;       // session item drawn from the whole catalogue
  double location_cross_weight = 0.15;  // kernel value for a foreign cluster
  double generic_word_prob = 0.15;
  double image_noise = 0.5;
  double topic_purity = 0.85;  // mass of the item's own subcategory in its topic mixture
  double holdout_cold_boost = 3.0;

  std::int64_t start_ts = 1704067200;  // 2024-01-01T00:00:00Z

  void validate() const;
  std::int64_t train_end() const { return start_ts + static_cast<std::int64_t>(days) * kSecondsPerDay; }
};

struct GenerationStats {
  std::int64_t funnel_trials = 0;  // interactions that went through the funnel
  std::array<std::int64_t, kNumSignals> funnel_counts{};
  std::int64_t coverage_events = 0;  // ViewAds added so every warm item has an event
};

/// Ground truth retained for tests.
struct SynthTruth {
  std::vector<int> item_subcat;       // dense subcategory index per ad
  std::vector<int> item_cluster;      // location cluster of the ad's postcode
  std::vector<int> subcat_profile;    // interest profile per subcategory
  std::vector<bool> item_cold;
  std::vector<std::string> postcodes;  // all generated postcodes
  std::vector<int> postcode_cluster;
};

struct SynthData {
  AdCorpus ads;
  EventLog events;          // training period; cold items have none
  EventLog holdout_events;  // the days after training; cold items participate
  ImageFeatures images;
  GenerationStats stats;
  SynthTruth truth;
};

SynthData generate(const SynthConfig& cfg);

/// Writes ads.tsv, events.tsv, holdout_events.tsv and images.imgf.
void write_synth(const fs::path& dir, const SynthData& data);

/// key=value config; keys are the field names, funnel entries are
/// `funnel.<signal token>`.
SynthConfig load_synth_config(const fs::path& path);
void save_synth_config(const fs::path& path, const SynthConfig& cfg);

}  // namespace hybridrec
