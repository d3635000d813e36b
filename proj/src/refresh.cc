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

#include "hybridrec/refresh.h"

#include <algorithm>
#include <chrono>
#include <iostream>

#include "hybridrec/eval.h"
#include "hybridrec/snapshot.h"

namespace hybridrec {

namespace {

std::uint64_t hash_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), dir));
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = fnv1a64("dir");
  for (const auto& f : files) {
    h = fnv1a64(f.generic_string(), h);
    h = mix64(h, hash_file(dir / f));
  }
  return h;
}

std::string als_key(const AlsOptions& o) {
  return "rank=" + std::to_string(o.rank) + ";reg=" + format_real(o.reg) + ";alpha=" + format_real(o.alpha) +
         ";iters=" + std::to_string(o.iters);
}

class StageLog {
 public:
  explicit StageLog(bool verbose) : verbose_(verbose) {}
  void operator()(const std::string& msg) const {
    if (!verbose_) return;
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::clog << "[refresh " << format_real(std::round(elapsed * 10) / 10) << "s] " << msg << "\n";
  }

 private:
  bool verbose_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

class ArtifactStore {
 public:
  ArtifactStore(fs::path root, bool reuse, RefreshResult& result) : root_(std::move(root)), reuse_(reuse), result_(result) {
    fs::create_directories(root_);
  }

  /// Trains into a temporary directory and moves it into place unless an
  /// artifact with the same fingerprint exists and reuse is enabled.
  fs::path ensure(const std::string& name, std::uint64_t fingerprint,
                  const std::function<void(const fs::path&)>& train) {
    const fs::path dir = root_ / name;
    const fs::path stamp = dir / "artifact.manifest";
    if (reuse_ && fs::exists(stamp)) {
      const Manifest m = Manifest::read(stamp);
      if (m.has("fingerprint") && m.get("fingerprint") == hex64(fingerprint)) {
        result_.reused.push_back(name);
        fingerprints_.emplace_back(name, fingerprint);
        return dir;
      }
    }
    const fs::path tmp = root_ / (name + ".tmp");
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    train(tmp);
    Manifest m;
    m.set("artifact", name);
    m.set("fingerprint", hex64(fingerprint));
    m.write(tmp / "artifact.manifest");
    fs::remove_all(dir);
    fs::rename(tmp, dir);
    result_.trained.push_back(name);
    fingerprints_.emplace_back(name, fingerprint);
    return dir;
  }

  const std::vector<std::pair<std::string, std::uint64_t>>& fingerprints() const { return fingerprints_; }

 private:
  fs::path root_;
  bool reuse_;
  RefreshResult& result_;
  std::vector<std::pair<std::string, std::uint64_t>> fingerprints_;
};

}  // namespace

RefreshResult refresh(const RefreshConfig& cfg) {
  const StageLog log(cfg.verbose);
  auto notify = [&](const std::string& step, const fs::path& dir) {
    log(step + " done");
    if (cfg.after_step) cfg.after_step(step, dir);
  };

  // Inputs.
  const fs::path events_path = cfg.data_dir / "events.tsv";
  const fs::path ads_path = cfg.data_dir / "ads.tsv";
  const fs::path images_path = cfg.data_dir / "images.imgf";
  const fs::path weights_path = cfg.data_dir / "weights.cfg";
  const EventLog events = load_events(events_path);
  const AdCorpus ads = load_ads(ads_path);
  const ImageFeatures images = load_image_features(images_path);
  const SignalWeightConfig weights = fs::exists(weights_path) ? SignalWeightConfig::load(weights_path)
                                                              : SignalWeightConfig();
  if (events.empty()) throw Error("refresh: event log is empty");
  std::int64_t now = 0;
  for (const auto& e : events) now = std::max(now, e.ts);
  const EventLog recent = window(events, cfg.lookback_days, now);
  const EventLog behaviour = filter_sparse(recent);
  log("loaded " + std::to_string(events.size()) + " events, " + std::to_string(behaviour.size()) +
      " after windowing and sparsity filtering");

  std::string weights_key;
  for (double w : weights.weights()) weights_key += format_real(w) + ",";
  const std::uint64_t h_events = hash_file(events_path);
  const std::uint64_t h_ads = hash_file(ads_path);
  const std::uint64_t h_images = hash_file(images_path);
  const std::uint64_t h_behaviour =
      mix64(mix64(h_events, fnv1a64(weights_key)), static_cast<std::uint64_t>(cfg.lookback_days));
  auto seed_for = [&](std::uint64_t stage) { return mix64(cfg.seed, stage); };

  RefreshResult result;
  fs::create_directories(cfg.out_dir);
  ArtifactStore store(cfg.out_dir / "artifacts", cfg.reuse, result);

  // Stage 1: modules trained on plentiful, noisy signals.
  AlsOptions als_opts = cfg.als;
  als_opts.seed = seed_for(1);
  const std::uint64_t fp_als = mix64(h_behaviour, fnv1a64(als_key(als_opts) + "|" + std::to_string(als_opts.seed)));
  const fs::path als_dir = store.ensure("als", fp_als, [&](const fs::path& dir) {
    als_fit(build_matrix(behaviour, weights), als_opts).save(dir, "item_factors");
  });
  const EmbeddingTable cf_table = FactorModel::load(als_dir).col_table();
  notify("als", als_dir);

  AlsOptions loc_opts = cfg.location;
  loc_opts.seed = seed_for(2);
  const std::uint64_t fp_loc =
      mix64(mix64(h_behaviour, h_ads), fnv1a64(als_key(loc_opts) + "|" + std::to_string(loc_opts.seed)));
  const fs::path loc_dir = store.ensure("location", fp_loc, [&](const fs::path& dir) {
    location_fit(behaviour, ads, weights, loc_opts).save(dir);
  });
  const EmbeddingTable location_table = EmbeddingTable::load(loc_dir);
  notify("location", loc_dir);

  Word2VecOptions w2v_opts = cfg.word2vec;
  w2v_opts.seed = seed_for(3);
  const std::uint64_t fp_w2v = mix64(
      h_ads, fnv1a64("dim=" + std::to_string(w2v_opts.dim) + ";window=" + std::to_string(w2v_opts.window) +
                     ";neg=" + std::to_string(w2v_opts.negatives) + ";epochs=" + std::to_string(w2v_opts.epochs) +
                     ";min=" + std::to_string(w2v_opts.min_count) + ";step=" + format_real(w2v_opts.step) + "|" +
                     std::to_string(w2v_opts.seed)));
  const fs::path w2v_dir = store.ensure("word_vectors", fp_w2v, [&](const fs::path& dir) {
    std::vector<std::vector<std::string>> corpus;
    for (const auto& ad : ads) corpus.push_back(ad_tokens(ad));
    word2vec_fit(corpus, w2v_opts).save(dir);
  });
  const WordVectors wv = WordVectors::load(w2v_dir);
  notify("word_vectors", w2v_dir);

  CnnOptions cnn_opts = cfg.cnn;
  cnn_opts.seed = seed_for(4);
  std::string cnn_widths;
  for (int w : cnn_opts.shape.widths) cnn_widths += std::to_string(w) + ",";
  const std::uint64_t fp_cnn = mix64(
      mix64(h_ads, fp_w2v),
      fnv1a64("epochs=" + std::to_string(cnn_opts.epochs) + ";step=" + format_real(cnn_opts.step) +
              ";momentum=" + format_real(cnn_opts.momentum) + ";batch=" + std::to_string(cnn_opts.batch) +
              ";widths=" + cnn_widths + ";filters=" + std::to_string(cnn_opts.shape.filters) +
              ";hidden=" + std::to_string(cnn_opts.shape.hidden) + ";len=" + std::to_string(cnn_opts.shape.seq_len) +
              "|" + std::to_string(cnn_opts.seed)));
  const fs::path cnn_dir = store.ensure("text_cnn", fp_cnn, [&](const fs::path& dir) {
    auto fit = cnn_fit(ads, wv, cnn_opts);
    log("text classifier training accuracy " + format_real(fit.train_accuracy));
    fit.model.save(dir);
  });
  const TextClassifier clf = TextClassifier::load(cnn_dir);
  notify("text_cnn", cnn_dir);

  MlpOptions mlp_opts = cfg.mlp;
  mlp_opts.seed = seed_for(5);
  mlp_opts.widths.back() = wv.dim();  // regression target is the title embedding
  std::string mlp_widths;
  for (auto w : mlp_opts.widths) mlp_widths += std::to_string(w) + ",";
  const std::uint64_t fp_mlp = mix64(
      mix64(mix64(h_ads, h_images), fp_w2v),
      fnv1a64("epochs=" + std::to_string(mlp_opts.epochs) + ";step=" + format_real(mlp_opts.step) +
              ";momentum=" + format_real(mlp_opts.momentum) + ";batch=" + std::to_string(mlp_opts.batch) +
              ";widths=" + mlp_widths + "|" + std::to_string(mlp_opts.seed)));
  const fs::path mlp_dir = store.ensure("image_projector", fp_mlp, [&](const fs::path& dir) {
    auto fit = mlp_fit(build_image_training_set(ads, images, wv), mlp_opts);
    log("image projector mse " + format_real(fit.mse_history.front()) + " -> " + format_real(fit.mse_history.back()));
    fit.model.save(dir);
  });
  const ImageProjector projector = ImageProjector::load(mlp_dir);
  notify("image_projector", mlp_dir);

  // Stage 2: the fusion model on conversion pairs.
  const fs::path staging = cfg.out_dir / "staging";
  fs::remove_all(staging);
  fs::create_directories(staging);

  const auto positives = build_pairs(recent);
  std::vector<PairExample> train_pos = positives;
  std::vector<PairExample> test_pos;
  if (cfg.holdout_fraction > 0.0 && positives.size() >= 2) {
    auto split = split_pairs(positives, cfg.holdout_fraction, seed_for(6));
    train_pos = std::move(split.train);
    test_pos = std::move(split.test);
  }
  std::vector<std::string> universe;
  for (const auto& ad : ads) {
    if (ad.active) universe.push_back(ad.item_id);
  }
  auto train_pairs = train_pos;
  const auto negatives = sample_negatives(train_pos, universe, cfg.negative_ratio, seed_for(7));
  train_pairs.insert(train_pairs.end(), negatives.begin(), negatives.end());
  save_pairs(staging / "pairs.tsv", train_pairs);
  save_pairs(staging / "test_pairs.tsv", test_pos);
  notify("pairs", staging);

  const auto loaded_pairs = load_pairs(staging / "pairs.tsv");
  const EmbeddingTable text_table = text_embed_all(ads, clf, wv);
  const EmbeddingTable image_table = image_embed_all(images, projector);
  BundleSources sources;
  sources.ads = &ads;
  sources.cf = &cf_table;
  sources.text = &text_table;
  sources.image = &image_table;
  sources.location = &location_table;
  const auto bundles = assemble_all(sources);

  HybridOptions hyb_opts = cfg.hybrid;
  hyb_opts.seed = seed_for(8);
  hyb_opts.shape.group_dims = {static_cast<int>(cf_table.dim()), static_cast<int>(text_table.dim()),
                               static_cast<int>(image_table.dim()), static_cast<int>(location_table.dim())};
  auto hyb = hybrid_fit(bundles, loaded_pairs, hyb_opts);
  log("hybrid loss " + format_real(hyb.loss_history.front()) + " -> " + format_real(hyb.loss_history.back()));
  hyb.model.save(staging / "hybrid");
  notify("hybrid", staging);
  const HybridModel model = HybridModel::load(staging / "hybrid");

  // Stage 3: represent every active item and publish the snapshot.
  std::vector<const FeatureBundle*> active;
  for (const auto& id : universe) active.push_back(&bundles.at(id));
  const Mat reps = model.represent_all(active).transpose();
  std::uint64_t content = hash_dir(staging / "hybrid");
  for (Eigen::Index r = 0; r < reps.rows(); ++r) {
    content = fnv1a64(universe[static_cast<std::size_t>(r)], content);
    for (Eigen::Index c = 0; c < reps.cols(); ++c) {
      const float f = static_cast<float>(reps(r, c));
      content = fnv1a64(std::string_view(reinterpret_cast<const char*>(&f), sizeof(f)), content);
    }
  }
  result.snapshot_id = "snap-" + std::to_string(now) + "-" + hex64(content).substr(0, 12);
  const Snapshot snapshot = build_index(result.snapshot_id, EmbeddingTable(universe, reps), ads);
  snapshot.save(staging);
  notify("index", staging);

  Manifest man;
  man.set("snapshot_id", result.snapshot_id);
  man.set("now", now);
  man.set("seed", std::to_string(cfg.seed));
  man.set("items", static_cast<std::int64_t>(snapshot.size()));
  man.set("dim", static_cast<std::int64_t>(snapshot.dim()));
  for (const auto& [name, fp] : store.fingerprints()) {
    man.set("artifact." + name, "artifacts/" + name);
    man.set("artifact." + name + ".fingerprint", hex64(fp));
    man.set("artifact." + name + ".content", hex64(hash_dir(cfg.out_dir / "artifacts" / name)));
  }
  man.set("hybrid", "hybrid");
  man.set("hybrid.content", hex64(hash_dir(staging / "hybrid")));
  man.set("index", "index.mat");
  man.set("index.content", hex64(hash_file(staging / "index.mat")));
  man.set("pairs.train_positive", static_cast<std::int64_t>(train_pos.size()));
  man.set("pairs.train_negative", static_cast<std::int64_t>(negatives.size()));
  man.set("pairs.test_positive", static_cast<std::int64_t>(test_pos.size()));
  man.write(staging / "manifest");

  const fs::path snapshots = cfg.out_dir / "snapshots";
  fs::create_directories(snapshots);
  result.snapshot_dir = snapshots / result.snapshot_id;
  if (fs::exists(result.snapshot_dir)) {
    // Same id means same content; the published copy stays untouched.
    fs::remove_all(staging);
  } else {
    fs::rename(staging, result.snapshot_dir);
  }
  const fs::path tmp_current = cfg.out_dir / "CURRENT.tmp";
  write_file(tmp_current, "snapshots/" + result.snapshot_id + "\n");
  fs::rename(tmp_current, cfg.out_dir / "CURRENT");
  log("published " + result.snapshot_id);
  return result;
}

void apply_refresh_overrides(RefreshConfig& cfg, const fs::path& path) {
  const Manifest m = Manifest::read(path);
  for (const auto& [key, value] : m.entries()) {
    auto as_int = [&] { return static_cast<int>(m.get_int(key)); };
    auto as_real = [&] { return m.get_real(key); };
    auto als = [&](AlsOptions& o, const std::string& field) {
      if (field == "rank") o.rank = as_int();
      else if (field == "reg") o.reg = as_real();
      else if (field == "alpha") o.alpha = as_real();
      else if (field == "iters") o.iters = as_int();
      else if (field == "threads") o.threads = as_int();
      else return false;
      return true;
    };
    const auto dot = key.find('.');
    const std::string group = key.substr(0, dot);
    const std::string field = dot == std::string::npos ? "" : key.substr(dot + 1);
    bool ok = true;
    if (key == "lookback_days") cfg.lookback_days = as_int();
    else if (key == "negative_ratio") cfg.negative_ratio = as_int();
    else if (key == "holdout_fraction") cfg.holdout_fraction = as_real();
    else if (group == "als") ok = als(cfg.als, field);
    else if (group == "location") ok = als(cfg.location, field);
    else if (group == "word2vec") {
      if (field == "dim") cfg.word2vec.dim = as_int();
      else if (field == "window") cfg.word2vec.window = as_int();
      else if (field == "negatives") cfg.word2vec.negatives = as_int();
      else if (field == "epochs") cfg.word2vec.epochs = as_int();
      else if (field == "min_count") cfg.word2vec.min_count = as_int();
      else if (field == "step") cfg.word2vec.step = as_real();
      else ok = false;
    } else if (group == "cnn") {
      if (field == "epochs") cfg.cnn.epochs = as_int();
      else if (field == "step") cfg.cnn.step = as_real();
      else if (field == "momentum") cfg.cnn.momentum = as_real();
      else if (field == "batch") cfg.cnn.batch = as_int();
      else if (field == "filters") cfg.cnn.shape.filters = as_int();
      else if (field == "seq_len") cfg.cnn.shape.seq_len = as_int();
      else ok = false;
    } else if (group == "mlp") {
      if (field == "epochs") cfg.mlp.epochs = as_int();
      else if (field == "step") cfg.mlp.step = as_real();
      else if (field == "momentum") cfg.mlp.momentum = as_real();
      else if (field == "batch") cfg.mlp.batch = as_int();
      else ok = false;
    } else if (group == "hybrid") {
      if (field == "epochs") cfg.hybrid.epochs = as_int();
      else if (field == "step") cfg.hybrid.step = as_real();
      else if (field == "momentum") cfg.hybrid.momentum = as_real();
      else if (field == "batch") cfg.hybrid.batch = as_int();
      else if (field == "cf_dropout") cfg.hybrid.cf_dropout = as_real();
      else ok = false;
    } else {
      ok = false;
    }
    if (!ok) throw Error(path.string() + ": unknown refresh option '" + key + "'");
  }
}

}  // namespace hybridrec
