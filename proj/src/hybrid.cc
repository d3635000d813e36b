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

#include "hybridrec/hybrid.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace hybridrec {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::string_view group_name(std::size_t g) {
  static constexpr std::array<std::string_view, kNumGroups> names = {"cf", "text", "image", "location"};
  return names.at(g);
}

void FeatureBundle::set(Group g, Vec v) {
  groups[static_cast<std::size_t>(g)] = std::move(v);
  presence[static_cast<std::size_t>(g)] = true;
}

void FeatureBundle::clear(Group g) {
  groups[static_cast<std::size_t>(g)] = Vec();
  presence[static_cast<std::size_t>(g)] = false;
}

FeatureBundle assemble(const std::string& item_id, const BundleSources& src) {
  if (!src.ads) throw Error("assemble: no ad corpus");
  const Ad* ad = src.ads->find(item_id);
  if (!ad) throw Error("assemble: unknown item_id " + item_id);
  auto prep = [&](Vec v) {
    if (!src.normalize) return v;
    const double n = v.norm();
    if (n > 0.0) v /= n;
    return v;
  };
  FeatureBundle b;
  b.item_id = item_id;
  if (src.cf) {
    if (auto v = src.cf->get(item_id)) b.set(Group::kCf, prep(std::move(*v)));
  }
  if (!src.text) throw Error("assemble: no text embeddings");
  auto text = src.text->get(item_id);
  if (!text) throw Error("assemble: no text embedding for " + item_id);
  b.set(Group::kText, prep(std::move(*text)));
  if (src.image) {
    if (auto v = src.image->get(item_id)) b.set(Group::kImage, prep(std::move(*v)));
  }
  if (src.location) {
    if (auto v = src.location->get(ad->postcode)) b.set(Group::kLocation, prep(std::move(*v)));
  }
  return b;
}

std::unordered_map<std::string, FeatureBundle> assemble_all(const BundleSources& src) {
  if (!src.ads) throw Error("assemble_all: no ad corpus");
  std::unordered_map<std::string, FeatureBundle> out;
  for (const auto& ad : *src.ads) out.emplace(ad.item_id, assemble(ad.item_id, src));
  return out;
}

// ---------------------------------------------------------------------------
// Pairs

std::vector<PairExample> build_pairs(const EventLog& events) {
  std::map<std::pair<std::string, std::int64_t>, std::set<std::string>> baskets;
  for (const auto& e : events) {
    if (is_pair_label_signal(e.signal)) baskets[{e.user_id, utc_day(e.ts)}].insert(e.item_id);
  }
  std::set<std::pair<std::string, std::string>> unique;
  for (const auto& [key, items] : baskets) {
    for (auto i = items.begin(); i != items.end(); ++i) {
      for (auto j = std::next(i); j != items.end(); ++j) unique.emplace(*i, *j);
    }
  }
  std::vector<PairExample> out;
  out.reserve(unique.size());
  for (const auto& [a, b] : unique) out.push_back({a, b, true});
  return out;
}

std::vector<PairExample> sample_negatives(const std::vector<PairExample>& positives,
                                          const std::vector<std::string>& universe, int ratio,
                                          std::uint64_t seed, int max_retries) {
  if (ratio < 1) throw Error("sample_negatives: ratio must be >= 1");
  if (universe.empty()) throw Error("sample_negatives: empty universe");
  std::set<std::pair<std::string_view, std::string_view>> positive;
  for (const auto& p : positives) {
    positive.emplace(p.item_a, p.item_b);
    positive.emplace(p.item_b, p.item_a);
  }
  Rng rng(seed);
  std::vector<PairExample> out;
  out.reserve(positives.size() * static_cast<std::size_t>(ratio));
  for (const auto& p : positives) {
    for (int k = 0; k < ratio; ++k) {
      bool found = false;
      for (int attempt = 0; attempt <= max_retries; ++attempt) {
        const std::string& x = universe[rng.below(universe.size())];
        if (x == p.item_a || positive.count({p.item_a, x})) continue;
        out.push_back({p.item_a, x, false});
        found = true;
        break;
      }
      if (!found) {
        throw Error("sample_negatives: no admissible partner for " + p.item_a + " after " +
                    std::to_string(max_retries) + " retries; universe too small");
      }
    }
  }
  return out;
}

void save_pairs(const fs::path& path, const std::vector<PairExample>& pairs) {
  std::string out;
  for (const auto& p : pairs) out += p.item_a + '\t' + p.item_b + '\t' + (p.positive ? "1" : "0") + '\n';
  write_file(path, out);
}

std::vector<PairExample> load_pairs(const fs::path& path) {
  std::vector<PairExample> out;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": expected item_a<TAB>item_b<TAB>label");
    }
    PairExample p{line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1), true};
    const std::string label = line.substr(t2 + 1);
    if (label == "1" || label == "positive") {
      p.positive = true;
    } else if (label == "0" || label == "negative") {
      p.positive = false;
    } else {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": bad label '" + label + "'");
    }
    if (p.item_a.empty() || p.item_b.empty() || p.item_a == p.item_b) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": pair needs two distinct items");
    }
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model

int HybridShape::input_dim() const { return std::accumulate(group_dims.begin(), group_dims.end(), 0); }

int HybridShape::group_offset(std::size_t g) const {
  return std::accumulate(group_dims.begin(), group_dims.begin() + static_cast<std::ptrdiff_t>(g), 0);
}

HybridModel::HybridModel(HybridShape shape, Rng& rng) : shape_(std::move(shape)) {
  if (shape_.tower.empty()) throw Error("hybrid model: empty tower");
  for (int d : shape_.group_dims) {
    if (d < 1) throw Error("hybrid model: group dimensions must be positive");
  }
  gate_w_ = Mat::Zero(kNumGroups, 1);
  gate_b_ = Mat::Zero(kNumGroups, 1);
  std::vector<Eigen::Index> widths = {shape_.input_dim()};
  for (int w : shape_.tower) widths.push_back(w);
  tower_ = nn::DenseStack(widths, nn::Activation::kRelu, nn::Activation::kLinear, rng);
  tau_ = Mat::Constant(1, 1, kInitialTemperature);
}

Vec HybridModel::attention_scores(const FeatureBundle& b) const {
  Vec s(kNumGroups);
  for (std::size_t g = 0; g < kNumGroups; ++g) {
    s[static_cast<Eigen::Index>(g)] =
        b.presence[g] ? gate_w_(static_cast<Eigen::Index>(g), 0) * b.groups[g].mean() + gate_b_(static_cast<Eigen::Index>(g), 0)
                      : kNegInf;
  }
  return s;
}

Vec HybridModel::attention(const FeatureBundle& b) const {
  const Vec s = attention_scores(b);
  double mx = kNegInf;
  for (Eigen::Index g = 0; g < s.size(); ++g) mx = std::max(mx, s[g]);
  if (mx == kNegInf) throw Error("attention: bundle " + b.item_id + " has no present group");
  Vec w(kNumGroups);
  for (Eigen::Index g = 0; g < s.size(); ++g) w[g] = s[g] == kNegInf ? 0.0 : std::exp(s[g] - mx);
  return w / w.sum();
}

Vec HybridModel::gated_input(const FeatureBundle& b, const Vec& weights) const {
  Vec x = Vec::Zero(shape_.input_dim());
  for (std::size_t g = 0; g < kNumGroups; ++g) {
    if (!b.presence[g]) continue;
    if (b.groups[g].size() != shape_.group_dims[g]) {
      throw Error("hybrid model: " + std::string(group_name(g)) + " vector of " + b.item_id + " has dimension " +
                  std::to_string(b.groups[g].size()) + ", expected " + std::to_string(shape_.group_dims[g]));
    }
    x.segment(shape_.group_offset(g), shape_.group_dims[g]) =
        (static_cast<double>(kNumGroups) * weights[static_cast<Eigen::Index>(g)]) * b.groups[g];
  }
  return x;
}

namespace {

void normalize_columns(const Mat& raw, Mat& rep, Vec& norms) {
  rep = raw;
  norms = raw.colwise().norm().transpose();
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    if (norms[c] > 1e-12) {
      rep.col(c) /= norms[c];
    } else {
      rep.col(c).setZero();
      rep(0, c) = 1.0;
    }
  }
}

}  // namespace

Vec HybridModel::represent_with_weights(const FeatureBundle& b, const Vec& weights) const {
  Mat rep;
  Vec norms;
  normalize_columns(tower_.forward(gated_input(b, weights)), rep, norms);
  return rep.col(0);
}

Vec HybridModel::represent(const FeatureBundle& b) const { return represent_with_weights(b, attention(b)); }

HybridModel::Forward HybridModel::forward(const std::vector<const FeatureBundle*>& bundles) const {
  Forward f;
  f.input.resize(shape_.input_dim(), static_cast<Eigen::Index>(bundles.size()));
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    f.weights.push_back(attention(*bundles[i]));
    f.input.col(static_cast<Eigen::Index>(i)) = gated_input(*bundles[i], f.weights.back());
  }
  f.raw = tower_.forward(f.input, f.caches);
  normalize_columns(f.raw, f.rep, f.norms);
  return f;
}

Mat HybridModel::represent_all(const std::vector<const FeatureBundle*>& bundles) const {
  Mat out(shape_.output_dim(), static_cast<Eigen::Index>(bundles.size()));
  constexpr std::size_t kChunk = 512;
  for (std::size_t i = 0; i < bundles.size(); i += kChunk) {
    std::vector<const FeatureBundle*> chunk(bundles.begin() + static_cast<std::ptrdiff_t>(i),
                                            bundles.begin() + static_cast<std::ptrdiff_t>(std::min(bundles.size(), i + kChunk)));
    out.middleCols(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(chunk.size())) = forward(chunk).rep;
  }
  return out;
}

double HybridModel::loss_and_grad(const std::vector<PairRef>& pairs, std::vector<Mat>* grads) const {
  if (pairs.empty()) return 0.0;
  const auto n = static_cast<Eigen::Index>(pairs.size());
  std::vector<const FeatureBundle*> sides;
  sides.reserve(2 * pairs.size());
  for (const auto& p : pairs) sides.push_back(p.a);
  for (const auto& p : pairs) sides.push_back(p.b);
  const Forward f = forward(sides);
  const double tau = tau_(0, 0);

  double loss = 0.0;
  Vec dlogit(n);
  Vec cosine(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    cosine[i] = f.rep.col(i).dot(f.rep.col(n + i));
    const double s = tau * cosine[i];
    const double y = pairs[static_cast<std::size_t>(i)].positive ? 1.0 : 0.0;
    loss += softplus(s) - y * s;
    dlogit[i] = (sigmoid(s) - y) / static_cast<double>(n);
  }
  loss /= static_cast<double>(n);
  if (!grads) return loss;

  const std::size_t tower_offset = 2;
  const std::size_t tau_index = tower_offset + 2 * tower_.depth();
  (*grads)[tau_index](0, 0) += dlogit.dot(cosine);

  Mat drep(f.rep.rows(), 2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    drep.col(i) = (dlogit[i] * tau) * f.rep.col(n + i);
    drep.col(n + i) = (dlogit[i] * tau) * f.rep.col(i);
  }
  Mat draw(f.raw.rows(), 2 * n);
  for (Eigen::Index c = 0; c < 2 * n; ++c) {
    if (f.norms[c] > 1e-12) {
      draw.col(c) = (drep.col(c) - f.rep.col(c) * f.rep.col(c).dot(drep.col(c))) / f.norms[c];
    } else {
      draw.col(c).setZero();
    }
  }
  const Mat dinput = tower_.backward(draw, f.caches, *grads, tower_offset);

  for (Eigen::Index c = 0; c < 2 * n; ++c) {
    const FeatureBundle& b = *sides[static_cast<std::size_t>(c)];
    const Vec& w = f.weights[static_cast<std::size_t>(c)];
    Vec dw = Vec::Zero(kNumGroups);
    for (std::size_t g = 0; g < kNumGroups; ++g) {
      if (!b.presence[g]) continue;
      dw[static_cast<Eigen::Index>(g)] = static_cast<double>(kNumGroups) *
                                         b.groups[g].dot(dinput.col(c).segment(shape_.group_offset(g), shape_.group_dims[g]));
    }
    const double mix = w.dot(dw);
    for (std::size_t g = 0; g < kNumGroups; ++g) {
      if (!b.presence[g]) continue;
      const auto gi = static_cast<Eigen::Index>(g);
      const double ds = w[gi] * (dw[gi] - mix);
      (*grads)[0](gi, 0) += ds * b.groups[g].mean();
      (*grads)[1](gi, 0) += ds;
    }
  }
  return loss;
}

std::vector<Mat*> HybridModel::parameters() {
  std::vector<Mat*> p = {&gate_w_, &gate_b_};
  for (Mat* t : tower_.parameters()) p.push_back(t);
  p.push_back(&tau_);
  return p;
}

std::vector<const Mat*> HybridModel::parameters() const {
  std::vector<const Mat*> p = {&gate_w_, &gate_b_};
  for (const Mat* t : tower_.parameters()) p.push_back(t);
  p.push_back(&tau_);
  return p;
}

void HybridModel::clamp_temperature() { tau_(0, 0) = std::max(tau_(0, 0), kMinTemperature); }

void HybridModel::save(const fs::path& dir) const {
  fs::create_directories(dir);
  Manifest m;
  m.set("kind", "hybrid");
  std::string dims;
  for (int d : shape_.group_dims) dims += (dims.empty() ? "" : ",") + std::to_string(d);
  m.set("group_dims", dims);
  std::string tower;
  for (int w : shape_.tower) tower += (tower.empty() ? "" : ",") + std::to_string(w);
  m.set("tower", tower);
  m.set_real("temperature", tau_(0, 0));
  tower_.save(dir, "tower", m);
  m.write(dir / "manifest");
  write_mat0(dir / "gate.weight.mat", gate_w_);
  write_mat0(dir / "gate.bias.mat", gate_b_);
  write_mat0(dir / "temperature.mat", tau_);
}

namespace {

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const std::string tok = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!tok.empty()) out.push_back(std::stoi(tok));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

HybridModel HybridModel::load(const fs::path& dir) {
  const Manifest m = Manifest::read(dir / "manifest");
  HybridModel h;
  const auto dims = parse_int_list(m.get("group_dims"));
  if (dims.size() != kNumGroups) throw Error("hybrid model: expected four group dimensions");
  std::copy(dims.begin(), dims.end(), h.shape_.group_dims.begin());
  h.shape_.tower = parse_int_list(m.get("tower"));
  h.tower_ = nn::DenseStack::load(dir, "tower", m);
  h.gate_w_ = read_mat0(dir / "gate.weight.mat");
  h.gate_b_ = read_mat0(dir / "gate.bias.mat");
  h.tau_ = read_mat0(dir / "temperature.mat");
  if (h.tower_.in() != h.shape_.input_dim() || h.tower_.out() != h.shape_.output_dim() ||
      h.gate_w_.rows() != static_cast<Eigen::Index>(kNumGroups) || h.tau_.size() != 1 || !(h.tau_(0, 0) > 0.0)) {
    throw Error("hybrid model in " + dir.string() + " is inconsistent with its manifest");
  }
  return h;
}

double score(const Vec& a, const Vec& b) { return a.dot(b); }

// ---------------------------------------------------------------------------
// Training

HybridFitResult hybrid_fit(const std::unordered_map<std::string, FeatureBundle>& bundles,
                           const std::vector<PairExample>& pairs, const HybridOptions& opts) {
  if (!(opts.step > 0.0) || opts.epochs < 1 || opts.batch < 1) throw Error("hybrid_fit: invalid options");
  bool any_pos = false;
  bool any_neg = false;
  std::vector<HybridModel::PairRef> refs;
  refs.reserve(pairs.size());
  for (const auto& p : pairs) {
    auto a = bundles.find(p.item_a);
    auto b = bundles.find(p.item_b);
    if (a == bundles.end() || b == bundles.end()) {
      throw Error("hybrid_fit: missing bundle for " + (a == bundles.end() ? p.item_a : p.item_b));
    }
    refs.push_back({&a->second, &b->second, p.positive});
    (p.positive ? any_pos : any_neg) = true;
  }
  if (!any_pos || !any_neg) throw Error("hybrid_fit: training pairs must contain both labels");

  Rng rng(opts.seed);
  HybridFitResult result;
  result.model = HybridModel(opts.shape, rng);
  HybridModel& model = result.model;
  nn::Momentum optimizer(model.parameters(), opts.step, opts.momentum);

  auto full_loss = [&] {
    double total = 0.0;
    for (std::size_t i = 0; i < refs.size(); i += 1024) {
      std::vector<HybridModel::PairRef> chunk(refs.begin() + static_cast<std::ptrdiff_t>(i),
                                              refs.begin() + static_cast<std::ptrdiff_t>(std::min(refs.size(), i + 1024)));
      total += model.loss_and_grad(chunk, nullptr) * static_cast<double>(chunk.size());
    }
    return total / static_cast<double>(refs.size());
  };
  result.loss_history.push_back(full_loss());

  std::vector<std::size_t> order(refs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<FeatureBundle> dropped;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(opts.batch)) {
      const std::size_t end = std::min(order.size(), i + static_cast<std::size_t>(opts.batch));
      std::vector<HybridModel::PairRef> batch;
      dropped.clear();
      dropped.reserve(2 * (end - i));
      auto maybe_drop = [&](const FeatureBundle* b) {
        if (opts.cf_dropout > 0.0 && b->has(Group::kCf) && rng.bernoulli(opts.cf_dropout)) {
          dropped.push_back(*b);
          dropped.back().clear(Group::kCf);
          return static_cast<const FeatureBundle*>(&dropped.back());
        }
        return b;
      };
      for (std::size_t j = i; j < end; ++j) {
        const auto& r = refs[order[j]];
        batch.push_back({maybe_drop(r.a), maybe_drop(r.b), r.positive});
      }
      auto grads = nn::zeros_like(std::as_const(model).parameters());
      model.loss_and_grad(batch, &grads);
      optimizer.apply(grads);
      model.clamp_temperature();
    }
    result.loss_history.push_back(full_loss());
    if (!std::isfinite(result.loss_history.back())) throw Error("hybrid_fit: training diverged");
  }
  return result;
}

}  // namespace hybridrec
