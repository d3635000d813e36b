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

#include "hybridrec/synthgen.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace hybridrec {

void SynthConfig::validate() const {
  const std::pair<const char*, int> counts[] = {
      {"n_users", n_users},           {"n_items", n_items},
      {"n_categories", n_categories}, {"n_subcats_per_category", n_subcats_per_category},
      {"n_postcodes", n_postcodes},   {"n_location_clusters", n_location_clusters},
      {"vocab_size", vocab_size},     {"generic_vocab_size", generic_vocab_size},
      {"title_len", title_len},       {"desc_len", desc_len},
      {"image_dim", image_dim},       {"days", days},
      {"session_min_items", session_min_items}};
  for (const auto& [name, v] : counts) {
    if (v < 1) throw Error(std::string("synth config: ") + name + " must be >= 1");
  }
  if (holdout_days < 0) throw Error("synth config: holdout_days must be >= 0");
  if (session_max_items < session_min_items) throw Error("synth config: session_max_items < session_min_items");
  if (n_location_clusters > n_postcodes) throw Error("synth config: more location clusters than postcodes");
  const std::pair<const char*, double> probs[] = {
      {"cold_start_fraction", cold_start_fraction}, {"inactive_fraction", inactive_fraction},
      {"session_prob", session_prob},               {"explore_prob", explore_prob},
      {"location_cross_weight", location_cross_weight}, {"generic_word_prob", generic_word_prob},
      {"topic_purity", topic_purity}};
  for (const auto& [name, v] : probs) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(std::string("synth config: ") + name + " must lie in [0,1]");
  }
  for (std::size_t k = 0; k < kNumSignals; ++k) {
    if (!(funnel[k] >= 0.0 && funnel[k] <= 1.0)) {
      throw Error("synth config: funnel probability for " + std::string(signal_token(kAllSignals[k])) +
                  " must lie in [0,1]");
    }
  }
  if (image_noise < 0.0) throw Error("synth config: image_noise must be >= 0");
  if (holdout_cold_boost <= 0.0) throw Error("synth config: holdout_cold_boost must be > 0");
  if (start_ts < 0) throw Error("synth config: start_ts must be >= 0");
}

namespace {

struct UserProfile {
  int home_cluster = 0;
  std::vector<int> profiles;
  std::vector<double> profile_weights;
};

std::string pad_number(int v, int width) {
  std::string s = std::to_string(v);
  if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  return s;
}

class Generator {
 public:
  explicit Generator(const SynthConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {}

  SynthData run() {
    build_vocabulary();
    build_profiles();
    build_postcodes();
    build_items();
    build_users();
    simulate();
    return std::move(out_);
  }

 private:
  int n_subcats() const { return cfg_.n_categories * cfg_.n_subcats_per_category; }

  void build_vocabulary() {
    const int n = n_subcats();
    const int per_topic = std::max(2, cfg_.vocab_size / n);
    // Shuffled numbering keeps token names uninformative about the topic.
    std::vector<int> ids(static_cast<std::size_t>(per_topic * n));
    std::iota(ids.begin(), ids.end(), 0);
    rng_.shuffle(ids);
    topic_words_.assign(static_cast<std::size_t>(n), {});
    for (int t = 0; t < n; ++t) {
      for (int j = 0; j < per_topic; ++j) {
        topic_words_[t].push_back("w" + std::to_string(ids[static_cast<std::size_t>(t * per_topic + j)]));
      }
    }
    for (int j = 0; j < cfg_.generic_vocab_size; ++j) generic_words_.push_back("g" + std::to_string(j));
  }

  void build_profiles() {
    const int n = n_subcats();
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng_.shuffle(order);
    out_.truth.subcat_profile.assign(static_cast<std::size_t>(n), 0);
    int profile = 0;
    for (int i = 0; i < n; i += 2, ++profile) {
      std::vector<int> members = {order[static_cast<std::size_t>(i)]};
      if (i + 1 < n) members.push_back(order[static_cast<std::size_t>(i + 1)]);
      for (int s : members) out_.truth.subcat_profile[static_cast<std::size_t>(s)] = profile;
      profile_subcats_.push_back(members);
    }
  }

  void build_postcodes() {
    for (int p = 0; p < cfg_.n_postcodes; ++p) {
      out_.truth.postcodes.push_back(pad_number(1000 + p * 7, 4));
      out_.truth.postcode_cluster.push_back(p % cfg_.n_location_clusters);
    }
  }

  std::string sample_words(int topic, int count, bool capitalize) {
    std::string s;
    for (int j = 0; j < count; ++j) {
      const bool generic = rng_.bernoulli(cfg_.generic_word_prob);
      const auto& pool = generic ? generic_words_ : topic_words_[static_cast<std::size_t>(topic)];
      std::string w = pool[rng_.below(pool.size())];
      if (capitalize && j == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
      if (!s.empty()) s += ' ';
      s += w;
    }
    return s;
  }

  void build_items() {
    const int n = n_subcats();
    const auto n_items = static_cast<std::size_t>(cfg_.n_items);

    Mat expansion(cfg_.image_dim, n);
    for (Eigen::Index c = 0; c < expansion.cols(); ++c) {
      for (Eigen::Index r = 0; r < expansion.rows(); ++r) expansion(r, c) = rng_.normal();
    }

    const auto n_cold = static_cast<std::size_t>(std::llround(cfg_.cold_start_fraction * cfg_.n_items));
    std::vector<std::size_t> order(n_items);
    std::iota(order.begin(), order.end(), 0);
    rng_.shuffle(order);
    out_.truth.item_cold.assign(n_items, false);
    for (std::size_t i = 0; i < n_cold; ++i) out_.truth.item_cold[order[i]] = true;

    out_.images = ImageFeatures(static_cast<std::uint32_t>(cfg_.image_dim));
    std::vector<Ad> ads;
    const std::int64_t end = cfg_.train_end();
    for (std::size_t i = 0; i < n_items; ++i) {
      const int subcat = static_cast<int>(rng_.below(static_cast<std::uint64_t>(n)));
      const int postcode = static_cast<int>(rng_.below(static_cast<std::uint64_t>(cfg_.n_postcodes)));
      const bool cold = out_.truth.item_cold[i];
      Ad ad;
      ad.item_id = "i" + std::to_string(i);
      const int cat = subcat / cfg_.n_subcats_per_category;
      ad.category = "cat" + std::to_string(cat);
      ad.subcategory = ad.category + "-sub" + std::to_string(subcat % cfg_.n_subcats_per_category);
      ad.postcode = out_.truth.postcodes[static_cast<std::size_t>(postcode)];
      ad.created_at = cold ? end - kSecondsPerDay + static_cast<std::int64_t>(rng_.below(kSecondsPerDay))
                           : cfg_.start_ts - 30 * kSecondsPerDay +
                                 static_cast<std::int64_t>(rng_.below(30 * kSecondsPerDay));
      ad.active = cold || !rng_.bernoulli(cfg_.inactive_fraction);
      ad.title = sample_words(subcat, cfg_.title_len, true);
      ad.description = sample_words(subcat, cfg_.desc_len, true) + ".";
      ads.push_back(std::move(ad));

      // Topic mixture: mostly the own subcategory, the rest spread at random.
      Vec mixture = Vec::Zero(n);
      double spread_total = 0.0;
      Vec spread(n);
      for (int t = 0; t < n; ++t) {
        spread[t] = -std::log(std::max(rng_.uniform(), 1e-300));
        spread_total += spread[t];
      }
      mixture = spread * ((1.0 - cfg_.topic_purity) / spread_total);
      mixture[subcat] += cfg_.topic_purity;
      Vec feature = expansion * mixture;
      for (Eigen::Index d = 0; d < feature.size(); ++d) feature[d] += cfg_.image_noise * rng_.normal();
      out_.images.add("i" + std::to_string(i), feature);

      out_.truth.item_subcat.push_back(subcat);
      out_.truth.item_cluster.push_back(out_.truth.postcode_cluster[static_cast<std::size_t>(postcode)]);
      popularity_.push_back(std::exp(0.5 * rng_.normal()));
    }
    out_.ads = AdCorpus(std::move(ads));
  }

  void build_users() {
    const auto n_profiles = static_cast<std::uint64_t>(profile_subcats_.size());
    for (int u = 0; u < cfg_.n_users; ++u) {
      UserProfile p;
      p.home_cluster = static_cast<int>(rng_.below(static_cast<std::uint64_t>(cfg_.n_location_clusters)));
      const int first = static_cast<int>(rng_.below(n_profiles));
      p.profiles.push_back(first);
      p.profile_weights.push_back(1.0);
      if (n_profiles > 1 && rng_.bernoulli(0.5)) {
        int second = first;
        while (second == first) second = static_cast<int>(rng_.below(n_profiles));
        p.profiles.push_back(second);
        p.profile_weights.push_back(0.5);
      }
      users_.push_back(std::move(p));
    }
  }

  // Candidate weights for one (profile, home cluster) pair, or the whole
  // catalogue when profile < 0.
  std::vector<double> candidate_weights(int profile, int cluster, bool holdout) const {
    const auto& truth = out_.truth;
    std::vector<double> w(static_cast<std::size_t>(cfg_.n_items), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const bool cold = truth.item_cold[i];
      if (!holdout && cold) continue;
      if (holdout && !out_.ads.ads()[i].active) continue;
      if (profile >= 0 && truth.subcat_profile[static_cast<std::size_t>(truth.item_subcat[i])] != profile) continue;
      double v = popularity_[i];
      v *= truth.item_cluster[i] == cluster ? 1.0 : cfg_.location_cross_weight;
      if (holdout && cold) v *= cfg_.holdout_cold_boost;
      w[i] = v;
    }
    return w;
  }

  void simulate_period(int first_day, int n_days, bool holdout, EventLog& sink) {
    const auto n_profiles = static_cast<int>(profile_subcats_.size());
    // Cache of candidate weights per (profile + 1, cluster); index 0 is "explore".
    std::vector<std::vector<std::vector<double>>> cache(
        static_cast<std::size_t>(n_profiles + 1),
        std::vector<std::vector<double>>(static_cast<std::size_t>(cfg_.n_location_clusters)));
    auto weights_for = [&](int profile, int cluster) -> std::vector<double>& {
      auto& slot = cache[static_cast<std::size_t>(profile + 1)][static_cast<std::size_t>(cluster)];
      if (slot.empty()) slot = candidate_weights(profile, cluster, holdout);
      return slot;
    };

    for (int day = first_day; day < first_day + n_days; ++day) {
      const std::int64_t day_start = cfg_.start_ts + static_cast<std::int64_t>(day) * kSecondsPerDay;
      for (int u = 0; u < cfg_.n_users; ++u) {
        if (!rng_.bernoulli(cfg_.session_prob)) continue;
        const UserProfile& user = users_[static_cast<std::size_t>(u)];
        const int profile = user.profiles[rng_.categorical(user.profile_weights)];
        const int n_session = cfg_.session_min_items +
                              static_cast<int>(rng_.below(static_cast<std::uint64_t>(
                                  cfg_.session_max_items - cfg_.session_min_items + 1)));
        std::int64_t ts = day_start + static_cast<std::int64_t>(rng_.below(20 * 3600));
        std::vector<std::size_t> seen;
        for (int s = 0; s < n_session; ++s) {
          const bool explore = rng_.bernoulli(cfg_.explore_prob);
          std::vector<double>& w = weights_for(explore ? -1 : profile, user.home_cluster);
          if (std::none_of(w.begin(), w.end(), [](double x) { return x > 0.0; })) continue;
          const std::size_t item = rng_.categorical(w);
          if (std::find(seen.begin(), seen.end(), item) != seen.end()) continue;
          seen.push_back(item);
          emit_interaction(u, item, ts, sink);
          ts += 60 + static_cast<std::int64_t>(rng_.below(300));
        }
      }
    }
  }

  void emit_interaction(int user, std::size_t item, std::int64_t ts, EventLog& sink) {
    ++out_.stats.funnel_trials;
    const std::string uid = "u" + std::to_string(user);
    const std::string& iid = out_.ads.ads()[item].item_id;
    for (std::size_t k = 0; k < kNumSignals; ++k) {
      if (rng_.bernoulli(cfg_.funnel[k])) {
        ++out_.stats.funnel_counts[k];
        sink.push_back(Event{uid, iid, kAllSignals[k], ts + static_cast<std::int64_t>(k) * 5});
      }
    }
  }

  void simulate() {
    simulate_period(0, cfg_.days, false, out_.events);

    // Every warm item carries at least one training event.
    std::vector<bool> has_event(static_cast<std::size_t>(cfg_.n_items), false);
    std::unordered_map<std::string, std::size_t> row;
    for (std::size_t i = 0; i < out_.ads.size(); ++i) row.emplace(out_.ads.ads()[i].item_id, i);
    for (const auto& e : out_.events) has_event[row.at(e.item_id)] = true;
    for (std::size_t i = 0; i < has_event.size(); ++i) {
      if (has_event[i] || out_.truth.item_cold[i]) continue;
      const auto user = rng_.below(static_cast<std::uint64_t>(cfg_.n_users));
      const auto day = static_cast<std::int64_t>(rng_.below(static_cast<std::uint64_t>(cfg_.days)));
      const std::int64_t ts = cfg_.start_ts + day * kSecondsPerDay +
                              static_cast<std::int64_t>(rng_.below(kSecondsPerDay));
      out_.events.push_back(Event{"u" + std::to_string(user), out_.ads.ads()[i].item_id,
                                  SignalKind::kViewAd, ts});
      ++out_.stats.coverage_events;
    }

    // Holdout draws do not count toward the funnel statistics of the
    // training log.
    const GenerationStats train_stats = out_.stats;
    simulate_period(cfg_.days, cfg_.holdout_days, true, out_.holdout_events);
    out_.stats = train_stats;

    auto by_time = [](const Event& a, const Event& b) {
      return a.ts != b.ts ? a.ts < b.ts : a.user_id != b.user_id ? a.user_id < b.user_id
                                                                  : a.item_id < b.item_id;
    };
    std::stable_sort(out_.events.begin(), out_.events.end(), by_time);
    std::stable_sort(out_.holdout_events.begin(), out_.holdout_events.end(), by_time);
  }

  const SynthConfig& cfg_;
  Rng rng_;
  SynthData out_;
  std::vector<std::vector<std::string>> topic_words_;
  std::vector<std::string> generic_words_;
  std::vector<std::vector<int>> profile_subcats_;
  std::vector<double> popularity_;
  std::vector<UserProfile> users_;
};

}  // namespace

SynthData generate(const SynthConfig& cfg) {
  cfg.validate();
  return Generator(cfg).run();
}

void write_synth(const fs::path& dir, const SynthData& data) {
  fs::create_directories(dir);
  save_ads(dir / "ads.tsv", data.ads);
  save_events(dir / "events.tsv", data.events);
  save_events(dir / "holdout_events.tsv", data.holdout_events);
  save_image_features(dir / "images.imgf", data.images);
}

namespace {

struct Field {
  const char* name;
  std::function<std::string(const SynthConfig&)> get;
  std::function<void(SynthConfig&, const Manifest&, const std::string&)> set;
};

template <typename T>
Field int_field(const char* name, T SynthConfig::*member) {
  return {name, [member](const SynthConfig& c) { return std::to_string(c.*member); },
          [member](SynthConfig& c, const Manifest& m, const std::string& key) {
            const auto v = m.get_int(key);
            if (v < 0 && std::is_unsigned_v<T>) throw Error("synth config: " + key + " must be >= 0");
            c.*member = static_cast<T>(v);
          }};
}

Field real_field(const char* name, double SynthConfig::*member) {
  return {name, [member](const SynthConfig& c) { return format_real(c.*member); },
          [member](SynthConfig& c, const Manifest& m, const std::string& key) { c.*member = m.get_real(key); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      int_field("n_users", &SynthConfig::n_users),
      int_field("n_items", &SynthConfig::n_items),
      int_field("n_categories", &SynthConfig::n_categories),
      int_field("n_subcats_per_category", &SynthConfig::n_subcats_per_category),
      int_field("n_postcodes", &SynthConfig::n_postcodes),
      int_field("n_location_clusters", &SynthConfig::n_location_clusters),
      int_field("vocab_size", &SynthConfig::vocab_size),
      int_field("generic_vocab_size", &SynthConfig::generic_vocab_size),
      int_field("title_len", &SynthConfig::title_len),
      int_field("desc_len", &SynthConfig::desc_len),
      int_field("image_dim", &SynthConfig::image_dim),
      int_field("days", &SynthConfig::days),
      int_field("holdout_days", &SynthConfig::holdout_days),
      int_field("seed", &SynthConfig::seed),
      real_field("cold_start_fraction", &SynthConfig::cold_start_fraction),
      real_field("inactive_fraction", &SynthConfig::inactive_fraction),
      real_field("session_prob", &SynthConfig::session_prob),
      int_field("session_min_items", &SynthConfig::session_min_items),
      int_field("session_max_items", &SynthConfig::session_max_items),
      real_field("explore_prob", &SynthConfig::explore_prob),
      real_field("location_cross_weight", &SynthConfig::location_cross_weight),
      real_field("generic_word_prob", &SynthConfig::generic_word_prob),
      real_field("image_noise", &SynthConfig::image_noise),
      real_field("topic_purity", &SynthConfig::topic_purity),
      real_field("holdout_cold_boost", &SynthConfig::holdout_cold_boost),
      int_field("start_ts", &SynthConfig::start_ts),
  };
  return f;
}

}  // namespace

SynthConfig load_synth_config(const fs::path& path) {
  const Manifest m = Manifest::read(path);
  SynthConfig cfg;
  for (const auto& [key, value] : m.entries()) {
    if (key.rfind("funnel.", 0) == 0) {
      const auto kind = parse_signal(key.substr(7));
      if (!kind) throw Error(path.string() + ": unknown funnel signal '" + key + "'");
      cfg.funnel[static_cast<std::size_t>(*kind)] = m.get_real(key);
      continue;
    }
    const auto& fs_ = fields();
    auto it = std::find_if(fs_.begin(), fs_.end(), [&](const Field& f) { return key == f.name; });
    if (it == fs_.end()) throw Error(path.string() + ": unknown synth config key '" + key + "'");
    it->set(cfg, m, key);
  }
  cfg.validate();
  return cfg;
}

void save_synth_config(const fs::path& path, const SynthConfig& cfg) {
  Manifest m;
  for (const auto& f : fields()) m.set(f.name, f.get(cfg));
  for (SignalKind k : kAllSignals) {
    m.set_real("funnel." + std::string(signal_token(k)), cfg.funnel[static_cast<std::size_t>(k)]);
  }
  m.write(path);
}

}  // namespace hybridrec
