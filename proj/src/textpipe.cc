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

#include "hybridrec/textpipe.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>

namespace hybridrec {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<std::string> ad_tokens(const Ad& ad) {
  auto tokens = tokenize(ad.title);
  auto desc = tokenize(ad.description);
  tokens.insert(tokens.end(), std::make_move_iterator(desc.begin()), std::make_move_iterator(desc.end()));
  return tokens;
}

// ---------------------------------------------------------------------------
// Word vectors

WordVectors::WordVectors(std::vector<std::string> vocab, Mat vectors)
    : vocab_(std::move(vocab)), vectors_(std::move(vectors)) {
  if (static_cast<Eigen::Index>(vocab_.size()) != vectors_.rows()) {
    throw Error("word vectors: vocabulary size does not match matrix rows");
  }
  check_finite(vectors_, "word vectors");
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (!index_.emplace(vocab_[i], i).second) throw Error("word vectors: duplicate token " + vocab_[i]);
  }
}

std::optional<std::size_t> WordVectors::index(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> WordVectors::ids(const std::vector<std::string>& tokens) const {
  std::vector<std::size_t> out;
  for (const auto& t : tokens) {
    if (auto i = index(t)) out.push_back(*i);
  }
  return out;
}

void WordVectors::save(const fs::path& dir) const {
  fs::create_directories(dir);
  Manifest m;
  m.set("kind", "word_vectors");
  m.set("tokenizer", "lower-alnum");
  m.set("vocab", static_cast<std::int64_t>(vocab_.size()));
  m.set("dim", static_cast<std::int64_t>(vectors_.cols()));
  m.write(dir / "manifest");
  write_lines(dir / "vocab.txt", vocab_);
  write_mat0(dir / "vectors.mat", vectors_);
}

WordVectors WordVectors::load(const fs::path& dir) {
  return WordVectors(read_lines(dir / "vocab.txt"), read_mat0(dir / "vectors.mat"));
}

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

WordVectors word2vec_fit(const std::vector<std::vector<std::string>>& corpus, const Word2VecOptions& opts) {
  if (opts.dim < 1 || opts.window < 1 || opts.negatives < 0 || opts.epochs < 1 || opts.min_count < 1) {
    throw Error("word2vec_fit: invalid options");
  }
  std::map<std::string, std::int64_t> counts;
  for (const auto& sentence : corpus) {
    for (const auto& t : sentence) ++counts[t];
  }
  std::vector<std::pair<std::string, std::int64_t>> kept;
  for (const auto& [t, c] : counts) {
    if (c >= opts.min_count) kept.emplace_back(t, c);
  }
  if (kept.empty()) throw Error("word2vec_fit: empty vocabulary after min-count filtering");
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::string> vocab;
  std::unordered_map<std::string, int> index;
  for (const auto& [t, c] : kept) {
    index.emplace(t, static_cast<int>(vocab.size()));
    vocab.push_back(t);
  }
  const auto v = static_cast<Eigen::Index>(vocab.size());

  std::vector<std::vector<int>> sentences;
  std::int64_t total_words = 0;
  for (const auto& sentence : corpus) {
    std::vector<int> ids;
    for (const auto& t : sentence) {
      auto it = index.find(t);
      if (it != index.end()) ids.push_back(it->second);
    }
    total_words += static_cast<std::int64_t>(ids.size());
    if (!ids.empty()) sentences.push_back(std::move(ids));
  }

  // Negative-sampling table over unigram^0.75.
  constexpr std::size_t kTableSize = 1'000'000;
  std::vector<int> table(kTableSize);
  {
    double norm = 0.0;
    for (const auto& [t, c] : kept) norm += std::pow(static_cast<double>(c), 0.75);
    std::size_t w = 0;
    double cum = std::pow(static_cast<double>(kept[0].second), 0.75) / norm;
    for (std::size_t a = 0; a < kTableSize; ++a) {
      table[a] = static_cast<int>(w);
      if (static_cast<double>(a) / kTableSize > cum && w + 1 < kept.size()) {
        ++w;
        cum += std::pow(static_cast<double>(kept[w].second), 0.75) / norm;
      }
    }
  }

  Rng rng(opts.seed);
  RowMat syn0(v, opts.dim);
  for (Eigen::Index r = 0; r < v; ++r) {
    for (Eigen::Index c = 0; c < opts.dim; ++c) syn0(r, c) = (rng.uniform() - 0.5) / opts.dim;
  }
  RowMat syn1 = RowMat::Zero(v, opts.dim);
  Eigen::RowVectorXd grad_in(opts.dim);

  const double total = static_cast<double>(total_words) * opts.epochs + 1.0;
  std::int64_t processed = 0;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    for (const auto& ids : sentences) {
      const auto n = static_cast<int>(ids.size());
      for (int pos = 0; pos < n; ++pos, ++processed) {
        const double lr = opts.step * std::max(1e-4, 1.0 - static_cast<double>(processed) / total);
        const int word = ids[static_cast<std::size_t>(pos)];
        const int reach = opts.window - static_cast<int>(rng.below(static_cast<std::uint64_t>(opts.window)));
        for (int j = std::max(0, pos - reach); j <= std::min(n - 1, pos + reach); ++j) {
          if (j == pos) continue;
          const int context = ids[static_cast<std::size_t>(j)];
          grad_in.setZero();
          for (int d = 0; d <= opts.negatives; ++d) {
            int target = word;
            double label = 1.0;
            if (d > 0) {
              target = table[rng.below(kTableSize)];
              if (target == word) continue;
              label = 0.0;
            }
            const double f = syn0.row(context).dot(syn1.row(target));
            const double g = (label - sigmoid(f)) * lr;
            grad_in.noalias() += g * syn1.row(target);
            syn1.row(target).noalias() += g * syn0.row(context);
          }
          syn0.row(context) += grad_in;
        }
      }
    }
  }
  return WordVectors(std::move(vocab), Mat(syn0));
}

// ---------------------------------------------------------------------------
// Classifier

TextClassifier::TextClassifier(TextCnnShape shape, std::vector<std::string> labels, Rng& rng)
    : shape_(std::move(shape)), labels_(std::move(labels)) {
  if (labels_.size() < 2) throw Error("text classifier needs at least two labels");
  if (shape_.widths.empty() || shape_.filters < 1 || shape_.hidden < 1 || shape_.embed_dim < 1) {
    throw Error("text classifier: invalid shape");
  }
  for (int w : shape_.widths) {
    if (w < 1 || w > shape_.seq_len) throw Error("text classifier: filter width must lie in [1, seq_len]");
  }
  shape_.n_labels = static_cast<int>(labels_.size());
  const auto e = shape_.embed_dim;
  for (int w : shape_.widths) {
    const double limit = std::sqrt(6.0 / (w * e));
    Mat wt(shape_.filters, w * e);
    for (Eigen::Index c = 0; c < wt.cols(); ++c) {
      for (Eigen::Index r = 0; r < wt.rows(); ++r) wt(r, c) = rng.uniform(-limit, limit);
    }
    conv_weight_.push_back(std::move(wt));
    conv_bias_.push_back(Mat::Zero(shape_.filters, 1));
  }
  const auto pooled = static_cast<Eigen::Index>(shape_.widths.size()) * shape_.filters;
  hidden_ = nn::make_dense(pooled, shape_.hidden, nn::Activation::kTanh, rng);
  output_ = nn::make_dense(shape_.hidden, shape_.n_labels, nn::Activation::kLinear, rng);
}

std::optional<int> TextClassifier::label_index(const std::string& label) const {
  auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  if (it == labels_.end() || *it != label) return std::nullopt;
  return static_cast<int>(it - labels_.begin());
}

Vec TextClassifier::pool(const Mat& tokens, ConvTrace* trace) const {
  const Eigen::Index e = shape_.embed_dim;
  if (tokens.rows() > 0 && tokens.cols() != e) throw Error("text classifier: token vector width mismatch");
  const Eigen::Index n = std::min<Eigen::Index>(tokens.rows(), shape_.seq_len);
  const auto f = shape_.filters;
  Vec pooled(static_cast<Eigen::Index>(shape_.widths.size()) * f);
  if (trace) {
    trace->windows.assign(shape_.widths.size(), {});
    trace->pre.assign(shape_.widths.size(), {});
    trace->argmax.assign(shape_.widths.size(), std::vector<int>(static_cast<std::size_t>(f), -1));
  }
  for (std::size_t k = 0; k < shape_.widths.size(); ++k) {
    const int w = shape_.widths[k];
    const Eigen::Index positions = shape_.seq_len - w + 1;
    // Windows that touch at least one real token; every other window sees
    // only padding and evaluates to the bias.
    const Eigen::Index real = std::min(n, positions);
    const bool has_padding_window = real < positions;
    Mat windows = Mat::Zero(real, w * e);
    for (Eigen::Index s = 0; s < real; ++s) {
      for (int o = 0; o < w && s + o < n; ++o) windows.block(s, o * e, 1, e) = tokens.row(s + o);
    }
    Mat pre = windows * conv_weight_[k].transpose();
    pre.rowwise() += conv_bias_[k].col(0).transpose();
    for (int fi = 0; fi < f; ++fi) {
      double best = 0.0;
      int arg = -2;
      for (Eigen::Index s = 0; s < real; ++s) {
        const double val = std::max(0.0, pre(s, fi));
        if (arg == -2 || val > best) {
          best = val;
          arg = static_cast<int>(s);
        }
      }
      if (has_padding_window) {
        const double val = std::max(0.0, conv_bias_[k](fi, 0));
        if (arg == -2 || val > best) {
          best = val;
          arg = -1;
        }
      }
      pooled[static_cast<Eigen::Index>(k) * f + fi] = best;
      if (trace) trace->argmax[k][static_cast<std::size_t>(fi)] = arg;
    }
    if (trace) {
      trace->windows[k] = std::move(windows);
      trace->pre[k] = std::move(pre);
    }
  }
  return pooled;
}

Vec TextClassifier::embed(const TextSample& s) const {
  const Vec pooled = pool(s.tokens, nullptr);
  Vec pre = hidden_.weight * pooled + hidden_.bias.col(0);
  return pre.array().tanh().matrix();
}

Vec TextClassifier::predict(const TextSample& s) const {
  const Vec h = embed(s);
  Mat logits = output_.weight * h + output_.bias.col(0);
  return nn::softmax_columns(logits).col(0);
}

double TextClassifier::loss_and_grad(const std::vector<const TextSample*>& batch, std::vector<Mat>* grads) const {
  if (batch.empty()) return 0.0;
  const auto b = static_cast<Eigen::Index>(batch.size());
  const std::size_t nk = shape_.widths.size();
  const Eigen::Index pooled_dim = static_cast<Eigen::Index>(nk) * shape_.filters;

  std::vector<ConvTrace> traces(batch.size());
  Mat pooled(pooled_dim, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    pooled.col(i) = pool(batch[static_cast<std::size_t>(i)]->tokens, grads ? &traces[static_cast<std::size_t>(i)] : nullptr);
  }
  Mat hpre = hidden_.weight * pooled;
  hpre.colwise() += hidden_.bias.col(0);
  const Mat h = hpre.array().tanh().matrix();
  Mat logits = output_.weight * h;
  logits.colwise() += output_.bias.col(0);
  Mat probs = nn::softmax_columns(logits);

  double loss = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const int y = batch[static_cast<std::size_t>(i)]->label;
    if (y < 0 || y >= shape_.n_labels) throw Error("text classifier: sample label out of range");
    loss -= std::log(std::max(probs(y, i), 1e-300));
  }
  loss /= static_cast<double>(b);
  if (!grads) return loss;

  // Parameter order: conv (weight, bias) per width, hidden, output.
  Mat dlogits = probs;
  for (Eigen::Index i = 0; i < b; ++i) dlogits(batch[static_cast<std::size_t>(i)]->label, i) -= 1.0;
  dlogits /= static_cast<double>(b);
  const std::size_t hid = 2 * nk;
  const std::size_t out = hid + 2;
  (*grads)[out].noalias() += dlogits * h.transpose();
  (*grads)[out + 1] += dlogits.rowwise().sum();
  const Mat dh = output_.weight.transpose() * dlogits;
  const Mat dhpre = (dh.array() * (1.0 - h.array().square())).matrix();
  (*grads)[hid].noalias() += dhpre * pooled.transpose();
  (*grads)[hid + 1] += dhpre.rowwise().sum();
  const Mat dpooled = hidden_.weight.transpose() * dhpre;

  for (Eigen::Index i = 0; i < b; ++i) {
    const auto& tr = traces[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < nk; ++k) {
      for (int fi = 0; fi < shape_.filters; ++fi) {
        const double g = dpooled(static_cast<Eigen::Index>(k) * shape_.filters + fi, i);
        const int arg = tr.argmax[k][static_cast<std::size_t>(fi)];
        if (arg == -1) {
          if (conv_bias_[k](fi, 0) > 0.0) (*grads)[2 * k + 1](fi, 0) += g;
        } else if (tr.pre[k](arg, fi) > 0.0) {
          (*grads)[2 * k].row(fi) += g * tr.windows[k].row(arg);
          (*grads)[2 * k + 1](fi, 0) += g;
        }
      }
    }
  }
  return loss;
}

std::vector<Mat*> TextClassifier::parameters() {
  std::vector<Mat*> p;
  for (std::size_t k = 0; k < conv_weight_.size(); ++k) {
    p.push_back(&conv_weight_[k]);
    p.push_back(&conv_bias_[k]);
  }
  p.push_back(&hidden_.weight);
  p.push_back(&hidden_.bias);
  p.push_back(&output_.weight);
  p.push_back(&output_.bias);
  return p;
}

std::vector<const Mat*> TextClassifier::parameters() const {
  std::vector<const Mat*> p;
  for (std::size_t k = 0; k < conv_weight_.size(); ++k) {
    p.push_back(&conv_weight_[k]);
    p.push_back(&conv_bias_[k]);
  }
  p.push_back(&hidden_.weight);
  p.push_back(&hidden_.bias);
  p.push_back(&output_.weight);
  p.push_back(&output_.bias);
  return p;
}

void TextClassifier::save(const fs::path& dir) const {
  fs::create_directories(dir);
  Manifest m;
  m.set("kind", "text_cnn");
  m.set("embed_dim", shape_.embed_dim);
  std::string widths;
  for (int w : shape_.widths) widths += (widths.empty() ? "" : ",") + std::to_string(w);
  m.set("widths", widths);
  m.set("filters", shape_.filters);
  m.set("hidden", shape_.hidden);
  m.set("seq_len", shape_.seq_len);
  m.set("n_labels", shape_.n_labels);
  m.write(dir / "manifest");
  write_lines(dir / "labels.txt", labels_);
  for (std::size_t k = 0; k < conv_weight_.size(); ++k) {
    write_mat0(dir / ("conv" + std::to_string(k) + ".weight.mat"), conv_weight_[k]);
    write_mat0(dir / ("conv" + std::to_string(k) + ".bias.mat"), conv_bias_[k]);
  }
  write_mat0(dir / "hidden.weight.mat", hidden_.weight);
  write_mat0(dir / "hidden.bias.mat", hidden_.bias);
  write_mat0(dir / "output.weight.mat", output_.weight);
  write_mat0(dir / "output.bias.mat", output_.bias);
}

TextClassifier TextClassifier::load(const fs::path& dir) {
  const Manifest m = Manifest::read(dir / "manifest");
  TextClassifier c;
  c.shape_.embed_dim = static_cast<int>(m.get_int("embed_dim"));
  c.shape_.widths.clear();
  for (const auto& tok : tokenize(m.get("widths"))) c.shape_.widths.push_back(std::stoi(tok));
  c.shape_.filters = static_cast<int>(m.get_int("filters"));
  c.shape_.hidden = static_cast<int>(m.get_int("hidden"));
  c.shape_.seq_len = static_cast<int>(m.get_int("seq_len"));
  c.shape_.n_labels = static_cast<int>(m.get_int("n_labels"));
  c.labels_ = read_lines(dir / "labels.txt");
  if (static_cast<int>(c.labels_.size()) != c.shape_.n_labels) throw Error("text classifier: label count mismatch");
  for (std::size_t k = 0; k < c.shape_.widths.size(); ++k) {
    c.conv_weight_.push_back(read_mat0(dir / ("conv" + std::to_string(k) + ".weight.mat")));
    c.conv_bias_.push_back(read_mat0(dir / ("conv" + std::to_string(k) + ".bias.mat")));
    if (c.conv_weight_.back().rows() != c.shape_.filters ||
        c.conv_weight_.back().cols() != c.shape_.widths[k] * c.shape_.embed_dim) {
      throw Error("text classifier: convolution shape mismatch");
    }
  }
  c.hidden_ = {read_mat0(dir / "hidden.weight.mat"), read_mat0(dir / "hidden.bias.mat"), nn::Activation::kTanh};
  c.output_ = {read_mat0(dir / "output.weight.mat"), read_mat0(dir / "output.bias.mat"), nn::Activation::kLinear};
  if (c.hidden_.out() != c.shape_.hidden || c.output_.out() != c.shape_.n_labels) {
    throw Error("text classifier: dense shape mismatch");
  }
  return c;
}

TextSample encode_text(const std::vector<std::string>& tokens, const WordVectors& wv, int seq_len) {
  auto ids = wv.ids(tokens);
  if (static_cast<int>(ids.size()) > seq_len) ids.resize(static_cast<std::size_t>(seq_len));
  TextSample s;
  s.tokens.resize(static_cast<Eigen::Index>(ids.size()), wv.dim());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    s.tokens.row(static_cast<Eigen::Index>(i)) = wv.vectors().row(static_cast<Eigen::Index>(ids[i]));
  }
  return s;
}

CnnFitResult cnn_fit(const std::vector<TextSample>& samples, const std::vector<std::string>& labels,
                     const CnnOptions& opts) {
  if (labels.size() < 2) throw Error("cnn_fit: need at least two distinct labels");
  if (!(opts.step > 0.0)) throw Error("cnn_fit: step must be positive");
  if (opts.epochs < 1 || opts.batch < 1) throw Error("cnn_fit: invalid epochs or batch");
  if (samples.empty()) throw Error("cnn_fit: no training samples");

  Rng rng(opts.seed);
  CnnFitResult result;
  result.model = TextClassifier(opts.shape, labels, rng);
  TextClassifier& model = result.model;
  nn::Momentum optimizer(model.parameters(), opts.step, opts.momentum);

  std::vector<const TextSample*> all;
  for (const auto& s : samples) all.push_back(&s);
  auto full_loss = [&] {
    double total = 0.0;
    for (std::size_t i = 0; i < all.size(); i += 256) {
      std::vector<const TextSample*> chunk(all.begin() + static_cast<std::ptrdiff_t>(i),
                                           all.begin() + static_cast<std::ptrdiff_t>(std::min(all.size(), i + 256)));
      total += model.loss_and_grad(chunk, nullptr) * static_cast<double>(chunk.size());
    }
    return total / static_cast<double>(all.size());
  };
  result.loss_history.push_back(full_loss());

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(opts.batch)) {
      std::vector<const TextSample*> batch;
      for (std::size_t j = i; j < std::min(order.size(), i + static_cast<std::size_t>(opts.batch)); ++j) {
        batch.push_back(&samples[order[j]]);
      }
      auto grads = nn::zeros_like(std::as_const(model).parameters());
      model.loss_and_grad(batch, &grads);
      optimizer.apply(grads);
    }
    result.loss_history.push_back(full_loss());
    if (!std::isfinite(result.loss_history.back())) throw Error("cnn_fit: training diverged");
  }

  std::size_t correct = 0;
  for (const auto& s : samples) {
    Eigen::Index arg = 0;
    model.predict(s).maxCoeff(&arg);
    if (arg == s.label) ++correct;
  }
  result.train_accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
  return result;
}

CnnFitResult cnn_fit(const AdCorpus& ads, const WordVectors& wv, const CnnOptions& opts) {
  std::vector<std::string> labels;
  for (const auto& ad : ads) labels.push_back(ad.label());
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  if (labels.size() < 2) throw Error("cnn_fit: corpus has a single label");

  CnnOptions o = opts;
  o.shape.embed_dim = static_cast<int>(wv.dim());
  std::vector<TextSample> samples;
  samples.reserve(ads.size());
  for (const auto& ad : ads) {
    TextSample s = encode_text(ad_tokens(ad), wv, o.shape.seq_len);
    s.label = static_cast<int>(std::lower_bound(labels.begin(), labels.end(), ad.label()) - labels.begin());
    samples.push_back(std::move(s));
  }
  return cnn_fit(samples, labels, o);
}

Vec text_embed(const Ad& ad, const TextClassifier& clf, const WordVectors& wv) {
  return clf.embed(encode_text(ad_tokens(ad), wv, clf.shape().seq_len));
}

EmbeddingTable text_embed_all(const AdCorpus& ads, const TextClassifier& clf, const WordVectors& wv) {
  std::vector<std::string> ids;
  Mat vectors(static_cast<Eigen::Index>(ads.size()), clf.shape().hidden);
  Eigen::Index r = 0;
  for (const auto& ad : ads) {
    ids.push_back(ad.item_id);
    vectors.row(r++) = text_embed(ad, clf, wv).transpose();
  }
  return EmbeddingTable(std::move(ids), std::move(vectors));
}

}  // namespace hybridrec
