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

#include "hybridrec/datamodel.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "binio.h"

namespace hybridrec {

namespace {

constexpr std::array<std::string_view, kNumSignals> kSignalTokens = {
    "view_ad", "show_interest", "follow_seller", "favorite_ad",
    "send_message", "show_phone", "contact_seller"};

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

[[noreturn]] void fail_at(std::string_view source, std::size_t lineno, const std::string& msg) {
  throw Error(std::string(source) + ":" + std::to_string(lineno) + ": " + msg);
}

}  // namespace

std::string_view signal_token(SignalKind kind) { return kSignalTokens[static_cast<std::size_t>(kind)]; }

std::optional<SignalKind> parse_signal(std::string_view token) {
  for (std::size_t i = 0; i < kNumSignals; ++i) {
    if (kSignalTokens[i] == token) return kAllSignals[i];
  }
  return std::nullopt;
}

bool is_conversion(SignalKind kind) {
  return kind == SignalKind::kSendMessage || kind == SignalKind::kShowPhone ||
         kind == SignalKind::kContactSeller;
}

bool is_pair_label_signal(SignalKind kind) {
  return kind == SignalKind::kSendMessage || kind == SignalKind::kShowPhone;
}

// ---------------------------------------------------------------------------
// Events

EventLog parse_events(std::istream& in, std::string_view source) {
  EventLog out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 4) {
      fail_at(source, lineno, "expected 4 tab-separated fields, got " + std::to_string(f.size()));
    }
    if (f[0].empty() || f[1].empty()) fail_at(source, lineno, "empty user or item id");
    const auto signal = parse_signal(f[2]);
    if (!signal) fail_at(source, lineno, "unknown signal '" + std::string(f[2]) + "'");
    const auto ts = parse_int(f[3]);
    if (!ts) fail_at(source, lineno, "malformed timestamp '" + std::string(f[3]) + "'");
    if (*ts < 0) fail_at(source, lineno, "negative timestamp");
    out.push_back(Event{std::string(f[0]), std::string(f[1]), *signal, *ts});
  }
  return out;
}

EventLog load_events(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open event file " + path.string());
  return parse_events(in, path.string());
}

std::string format_event(const Event& e) {
  std::string s = e.user_id;
  s += '\t';
  s += e.item_id;
  s += '\t';
  s += signal_token(e.signal);
  s += '\t';
  s += std::to_string(e.ts);
  return s;
}

void save_events(const fs::path& path, const EventLog& events) {
  std::string out;
  for (const auto& e : events) {
    out += format_event(e);
    out += '\n';
  }
  write_file(path, out);
}

// ---------------------------------------------------------------------------
// Signal weights

SignalWeightConfig::SignalWeightConfig() : weights_{1.0, 2.0, 3.0, 3.0, 5.0, 5.0, 5.0} {}

SignalWeightConfig::SignalWeightConfig(const std::array<double, kNumSignals>& weights)
    : weights_(weights) {
  validate();
}

SignalWeightConfig SignalWeightConfig::uniform(double w) {
  std::array<double, kNumSignals> ws;
  ws.fill(w);
  return SignalWeightConfig(ws);
}

void SignalWeightConfig::validate() const {
  for (std::size_t i = 0; i < kNumSignals; ++i) {
    if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i])) {
      throw Error("signal weight for " + std::string(kSignalTokens[i]) + " must be positive");
    }
  }
  const double view = weight(SignalKind::kViewAd);
  for (SignalKind k : kAllSignals) {
    if (is_conversion(k) && weight(k) < view) {
      throw Error("conversion signal " + std::string(signal_token(k)) +
                  " must weigh at least as much as view_ad");
    }
  }
}

SignalWeightConfig SignalWeightConfig::load(const fs::path& path) {
  const Manifest m = Manifest::read(path);
  std::array<double, kNumSignals> ws = SignalWeightConfig().weights();
  for (const auto& [key, value] : m.entries()) {
    const auto kind = parse_signal(key);
    if (!kind) throw Error(path.string() + ": unknown signal '" + key + "'");
    ws[static_cast<std::size_t>(*kind)] = m.get_real(key);
  }
  return SignalWeightConfig(ws);
}

void SignalWeightConfig::save(const fs::path& path) const {
  Manifest m;
  for (SignalKind k : kAllSignals) m.set_real(std::string(signal_token(k)), weight(k));
  m.write(path);
}

// ---------------------------------------------------------------------------
// Windowing and sparsity filtering

EventLog window(const EventLog& events, int lookback_days, std::int64_t now) {
  if (lookback_days <= 0) throw Error("window: lookback_days must be positive");
  const std::int64_t span = static_cast<std::int64_t>(lookback_days) * kSecondsPerDay;
  EventLog out;
  for (const auto& e : events) {
    if (now - e.ts <= span) out.push_back(e);
  }
  return out;
}

EventLog filter_sparse(const EventLog& events) {
  std::vector<bool> alive(events.size(), true);
  bool changed = true;
  while (changed) {
    changed = false;
    std::unordered_map<std::string_view, std::size_t> user_count;
    std::unordered_map<std::string_view, std::size_t> item_count;
    for (std::size_t i = 0; i < events.size(); ++i) {
      if (!alive[i]) continue;
      ++user_count[events[i].user_id];
      ++item_count[events[i].item_id];
    }
    for (std::size_t i = 0; i < events.size(); ++i) {
      if (!alive[i]) continue;
      if (user_count[events[i].user_id] == 1 || item_count[events[i].item_id] == 1) {
        alive[i] = false;
        changed = true;
      }
    }
  }
  EventLog out;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (alive[i]) out.push_back(events[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ads

AdCorpus::AdCorpus(std::vector<Ad> ads) : ads_(std::move(ads)) {
  std::unordered_map<std::string, std::string> parent;
  for (std::size_t i = 0; i < ads_.size(); ++i) {
    const Ad& ad = ads_[i];
    if (ad.item_id.empty()) throw Error("ad with empty item_id");
    if (!index_.emplace(ad.item_id, i).second) throw Error("duplicate item_id in corpus: " + ad.item_id);
    auto [it, inserted] = parent.emplace(ad.subcategory, ad.category);
    if (!inserted && it->second != ad.category) {
      throw Error("subcategory '" + ad.subcategory + "' appears under categories '" + it->second +
                  "' and '" + ad.category + "'");
    }
  }
}

const Ad* AdCorpus::find(std::string_view item_id) const {
  auto it = index_.find(std::string(item_id));
  return it == index_.end() ? nullptr : &ads_[it->second];
}

const Ad& AdCorpus::at(std::string_view item_id) const {
  const Ad* ad = find(item_id);
  if (!ad) throw Error("unknown item_id: " + std::string(item_id));
  return *ad;
}

std::string escape_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out += s[i];
      continue;
    }
    switch (s[++i]) {
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      case '\\': out += '\\'; break;
      default:
        out += '\\';
        out += s[i];
    }
  }
  return out;
}

AdCorpus parse_ads(std::istream& in, std::string_view source) {
  std::vector<Ad> ads;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 8) {
      fail_at(source, lineno, "expected 8 tab-separated fields, got " + std::to_string(f.size()));
    }
    Ad ad;
    ad.item_id = f[0];
    ad.category = f[1];
    ad.subcategory = f[2];
    ad.postcode = f[3];
    const auto created = parse_int(f[4]);
    if (!created || *created < 0) fail_at(source, lineno, "malformed created_at '" + std::string(f[4]) + "'");
    ad.created_at = *created;
    if (f[5] != "0" && f[5] != "1") fail_at(source, lineno, "active flag must be 0 or 1");
    ad.active = f[5] == "1";
    ad.title = unescape_text(f[6]);
    ad.description = unescape_text(f[7]);
    ads.push_back(std::move(ad));
  }
  try {
    return AdCorpus(std::move(ads));
  } catch (const Error& e) {
    throw Error(std::string(source) + ": " + e.what());
  }
}

AdCorpus load_ads(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ad corpus " + path.string());
  return parse_ads(in, path.string());
}

void save_ads(const fs::path& path, const AdCorpus& corpus) {
  std::string out;
  for (const auto& ad : corpus) {
    out += ad.item_id + '\t' + ad.category + '\t' + ad.subcategory + '\t' + ad.postcode + '\t' +
           std::to_string(ad.created_at) + '\t' + (ad.active ? "1" : "0") + '\t' +
           escape_text(ad.title) + '\t' + escape_text(ad.description) + '\n';
  }
  write_file(path, out);
}

// ---------------------------------------------------------------------------
// Image features

void ImageFeatures::add(std::string item_id, const Vec& feature) {
  if (feature.size() != static_cast<Eigen::Index>(dim_)) {
    throw Error("image feature for " + item_id + " has dimension " + std::to_string(feature.size()) +
                ", expected " + std::to_string(dim_));
  }
  if (!feature.allFinite()) throw Error("non-finite image feature for " + item_id);
  if (item_id.size() > 0xffff) throw Error("item id too long for IMGF record");
  if (!index_.emplace(item_id, ids_.size()).second) throw Error("duplicate image feature for " + item_id);
  ids_.push_back(std::move(item_id));
  for (Eigen::Index i = 0; i < feature.size(); ++i) data_.push_back(static_cast<float>(feature[i]));
}

std::optional<std::size_t> ImageFeatures::find(std::string_view item_id) const {
  auto it = index_.find(std::string(item_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ImageFeatures load_image_features(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open image feature file " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "IMGF", 4) != 0) {
    throw Error("bad IMGF magic in " + path.string());
  }
  try {
    ImageFeatures out(binio::get_u32(is));
    Vec row(out.dim());
    while (is.peek() != std::char_traits<char>::eof()) {
      const std::uint16_t len = binio::get_u16(is);
      std::string id(len, '\0');
      if (!is.read(id.data(), len)) throw Error("truncated item id");
      for (std::uint32_t d = 0; d < out.dim(); ++d) row[d] = binio::get_f32(is);
      out.add(std::move(id), row);
    }
    return out;
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void save_image_features(const fs::path& path, const ImageFeatures& features) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  os.write("IMGF", 4);
  binio::put_u32(os, features.dim());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& id = features.ids()[i];
    binio::put_u16(os, static_cast<std::uint16_t>(id.size()));
    os.write(id.data(), static_cast<std::streamsize>(id.size()));
    const auto row = features.row(i);
    for (Eigen::Index d = 0; d < row.size(); ++d) binio::put_f32(os, row[d]);
  }
  if (!os) throw Error("write failed: " + path.string());
}

}  // namespace hybridrec
