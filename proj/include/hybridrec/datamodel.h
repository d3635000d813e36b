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
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hybridrec/common.h"

namespace hybridrec {

/// Implicit behaviour signals, ordered roughly by proximity to a transaction.
enum class SignalKind : std::uint8_t {
  kViewAd,
  kShowInterest,
  kFollowSeller,
  kFavoriteAd,
  kSendMessage,
  kShowPhone,
  kContactSeller,
};

inline constexpr std::size_t kNumSignals = 7;
inline constexpr std::array<SignalKind, kNumSignals> kAllSignals = {
    SignalKind::kViewAd,      SignalKind::kShowInterest, SignalKind::kFollowSeller,
    SignalKind::kFavoriteAd,  SignalKind::kSendMessage,  SignalKind::kShowPhone,
    SignalKind::kContactSeller};

std::string_view signal_token(SignalKind kind);
std::optional<SignalKind> parse_signal(std::string_view token);

// SendMessage, ShowPhone, ContactSeller.
bool is_conversion(SignalKind kind);
// The two signals used as positive labels for the fusion model.
bool is_pair_label_signal(SignalKind kind);

struct Event {
  std::string user_id;
  std::string item_id;
  SignalKind signal = SignalKind::kViewAd;
  std::int64_t ts = 0;  // UTC seconds

  bool operator==(const Event&) const = default;
};

using EventLog = std::vector<Event>;

/// Parses `user<TAB>item<TAB>signal<TAB>ts` lines. Errors carry the source
/// name and the 1-based line number.
EventLog parse_events(std::istream& in, std::string_view source = "<stream>");
EventLog load_events(const fs::path& path);
void save_events(const fs::path& path, const EventLog& events);
std::string format_event(const Event& e);

class SignalWeightConfig {
 public:
  /// ViewAd 1, ShowInterest 2, FollowSeller 3, FavoriteAd 3, and 5 for each
  /// conversion signal.
  SignalWeightConfig();
  explicit SignalWeightConfig(const std::array<double, kNumSignals>& weights);

  static SignalWeightConfig uniform(double w = 1.0);
  /// key=value lines keyed by signal token; omitted signals keep the default.
  static SignalWeightConfig load(const fs::path& path);
  void save(const fs::path& path) const;

  double weight(SignalKind kind) const { return weights_[static_cast<std::size_t>(kind)]; }
  const std::array<double, kNumSignals>& weights() const { return weights_; }

  bool operator==(const SignalWeightConfig&) const = default;

 private:
  void validate() const;
  std::array<double, kNumSignals> weights_;
};

inline double signal_weight(SignalKind kind, const SignalWeightConfig& cfg) { return cfg.weight(kind); }

/// Keeps events with now - ts <= lookback_days days (closed boundary).
EventLog window(const EventLog& events, int lookback_days, std::int64_t now);

/// Removes events of users or items with a single event, repeated until no
/// such user or item remains.
EventLog filter_sparse(const EventLog& events);

struct Ad {
  std::string item_id;
  std::string category;
  std::string subcategory;
  std::string postcode;
  std::int64_t created_at = 0;
  bool active = true;
  std::string title;
  std::string description;

  std::string label() const { return category + "/" + subcategory; }
  bool operator==(const Ad&) const = default;
};

/// Validated collection of ads: unique ids and a single parent category per
/// subcategory.
class AdCorpus {
 public:
  AdCorpus() = default;
  explicit AdCorpus(std::vector<Ad> ads);

  const std::vector<Ad>& ads() const { return ads_; }
  std::size_t size() const { return ads_.size(); }
  const Ad* find(std::string_view item_id) const;
  const Ad& at(std::string_view item_id) const;
  bool contains(std::string_view item_id) const { return find(item_id) != nullptr; }

  auto begin() const { return ads_.begin(); }
  auto end() const { return ads_.end(); }

 private:
  std::vector<Ad> ads_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::string escape_text(std::string_view s);
std::string unescape_text(std::string_view s);

AdCorpus parse_ads(std::istream& in, std::string_view source = "<stream>");
AdCorpus load_ads(const fs::path& path);
void save_ads(const fs::path& path, const AdCorpus& corpus);

/// Precomputed image feature vectors keyed by item id.
class ImageFeatures {
 public:
  ImageFeatures() = default;
  explicit ImageFeatures(std::uint32_t dim) : dim_(dim) {}

  void add(std::string item_id, const Vec& feature);

  std::uint32_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  std::optional<std::size_t> find(std::string_view item_id) const;
  // Row i of the feature table.
  Eigen::Map<const Eigen::VectorXf> row(std::size_t i) const {
    return {data_.data() + i * dim_, static_cast<Eigen::Index>(dim_)};
  }
  Vec row_d(std::size_t i) const { return row(i).cast<double>(); }

 private:
  std::uint32_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Binary `IMGF` file: magic, u32 dim, then (u16 id length, id bytes, dim f32)
/// records, all little-endian.
ImageFeatures load_image_features(const fs::path& path);
void save_image_features(const fs::path& path, const ImageFeatures& features);

}  // namespace hybridrec
