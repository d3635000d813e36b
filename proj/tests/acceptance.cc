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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <set>
#include <thread>

#include "CLI11.hpp"
#include "hybridrec/eval.h"
#include "hybridrec/http_service.h"
#include "hybridrec/refresh.h"
#include "hybridrec/snapshot.h"
#include "hybridrec/synthgen.h"
#include "testutil.h"
#include "httplib.h"

using namespace hybridrec;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const Outcome& o) {
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  if (!o.pass) ++failures;
}

template <typename F>
void run(const std::string& name, F&& f) {
  try {
    report(name, f());
  } catch (const std::exception& e) {
    report(name, {false, std::string("exception: ") + e.what()});
  }
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

// --- ALS -------------------------------------------------------------------

InteractionMatrix random_matrix(Rng& rng, int rows, int cols, double density) {
  std::vector<std::string> r, c;
  for (int i = 0; i < rows; ++i) r.push_back("u" + std::to_string(100000 + i));
  for (int j = 0; j < cols; ++j) c.push_back("i" + std::to_string(100000 + j));
  std::vector<MatrixCell> cells;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (rng.bernoulli(density)) {
        cells.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), 1.0 + 5.0 * rng.uniform()});
      }
    }
  }
  if (cells.empty()) cells.push_back({0, 0, 1.0});
  return InteractionMatrix(r, c, cells);
}

Outcome als_correctness() {
  int increases = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(7000 + seed);
    const auto m = random_matrix(rng, 40 + static_cast<int>(rng.below(40)), 30 + static_cast<int>(rng.below(50)), 0.1);
    AlsOptions o;
    o.rank = 6 + static_cast<int>(seed % 5);
    o.reg = rng.uniform(0.01, 1.0);
    o.alpha = rng.uniform(0.5, 5.0);
    o.iters = 10;
    o.seed = seed;
    std::vector<double> trace;
    o.trace = [&](int, double v) { trace.push_back(v); };
    als_fit(m, o);
    for (std::size_t i = 1; i < trace.size(); ++i) {
      if (trace[i] > trace[i - 1] * (1 + 1e-8)) ++increases;
    }
  }

  // Dense ridge regression per row:
  //   x = (Y^T C_u Y + reg I)^-1 Y^T C_u p_u
  double worst = 0.0;
  Rng rng(1);
  for (int trial = 0; trial < 40; ++trial) {
    const int rows = 6, cols = 9, k = 4;
    const auto m = random_matrix(rng, rows, cols, 0.4);
    const Mat y = testutil::random_mat(rng, cols, k);
    const double reg = rng.uniform(0.01, 2.0), alpha = rng.uniform(0.1, 4.0);
    for (int u = 0; u < rows; ++u) {
      Vec c = Vec::Ones(cols), p = Vec::Zero(cols);
      for (const auto& cell : m.row_cells(static_cast<std::size_t>(u))) {
        c[cell.col] = 1 + alpha * cell.value;
        p[cell.col] = 1;
      }
      const Mat lhs = y.transpose() * c.asDiagonal() * y + reg * Mat::Identity(k, k);
      const Vec oracle = lhs.fullPivLu().solve(y.transpose() * c.asDiagonal() * p);
      const Vec x = solve_factor_row(y, y.transpose() * y, m.row_cells(static_cast<std::size_t>(u)), true, alpha, reg);
      worst = std::max(worst, (x - oracle).norm() / std::max(oracle.norm(), 1e-12));
    }
  }

  Rng big_rng(2);
  const auto big = random_matrix(big_rng, 500, 800, 0.05);
  AlsOptions o;
  o.rank = 32;
  o.seed = 3;
  const auto t0 = Clock::now();
  als_fit(big, o);
  const double secs = seconds_since(t0);

  Outcome out;
  out.pass = increases == 0 && worst < 1e-6 && secs < 60.0;
  out.detail = "objective increases " + std::to_string(increases) + " over 20 seeds; ridge rel err " +
               fmt("%.2e", worst) + "; 500x800 rank 32 in " + fmt("%.2f", secs) + " s";
  return out;
}

// --- gradients -------------------------------------------------------------

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  Rng rng(11);

  TextCnnShape ts;
  ts.embed_dim = 6;
  ts.filters = 3;
  ts.hidden = 5;
  ts.seq_len = 10;
  ts.n_labels = 3;
  TextClassifier clf(ts, {"a/x", "a/y", "b/z"}, rng);
  for (auto* p : clf.parameters()) *p = testutil::random_mat(rng, p->rows(), p->cols(), 0.5);
  std::vector<TextSample> samples(5);
  const int lengths[] = {10, 4, 2, 7, 14};
  for (int i = 0; i < 5; ++i) {
    samples[static_cast<std::size_t>(i)].tokens = testutil::random_mat(rng, lengths[i], 6);
    samples[static_cast<std::size_t>(i)].label = i % 3;
  }
  std::vector<const TextSample*> batch;
  for (const auto& s : samples) batch.push_back(&s);
  auto g_cnn = nn::zeros_like(std::as_const(clf).parameters());
  clf.loss_and_grad(batch, &g_cnn);
  const double e_cnn =
      testutil::max_gradient_error(clf.parameters(), g_cnn, [&] { return clf.loss_and_grad(batch, nullptr); });

  ImageProjector proj({7, 6, 6, 5, 5, 4, 4, 3}, rng);
  for (auto* p : proj.parameters()) *p = testutil::random_mat(rng, p->rows(), p->cols(), 0.6);
  proj.set_standardization(testutil::random_mat(rng, 7, 1).col(0), Vec::Constant(7, 1.3));
  const Mat x = testutil::random_mat(rng, 7, 5), y = testutil::random_mat(rng, 3, 5);
  auto g_mlp = nn::zeros_like(std::as_const(proj).parameters());
  proj.loss_and_grad(x, y, &g_mlp);
  const double e_mlp =
      testutil::max_gradient_error(proj.parameters(), g_mlp, [&] { return proj.loss_and_grad(x, y, nullptr); });

  HybridShape hs;
  hs.group_dims = {3, 2, 3, 2};
  hs.tower = {7, 5, 4};
  HybridModel hyb(hs, rng);
  for (auto* p : hyb.parameters()) *p = testutil::random_mat(rng, p->rows(), p->cols(), 0.5);
  hyb.parameters().back()->setConstant(2.5);
  std::vector<FeatureBundle> bundles(10);
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    bundles[i].item_id = "i" + std::to_string(i);
    for (std::size_t g = 0; g < kNumGroups; ++g) {
      if (g == 1 || rng.bernoulli(0.7)) bundles[i].set(static_cast<Group>(g), testutil::random_mat(rng, hs.group_dims[g], 1).col(0));
    }
  }
  std::vector<HybridModel::PairRef> pairs;
  for (std::size_t i = 0; i < bundles.size(); ++i) pairs.push_back({&bundles[i], &bundles[(i * 7 + 3) % bundles.size()], i % 2 == 0});
  auto g_hyb = nn::zeros_like(std::as_const(hyb).parameters());
  hyb.loss_and_grad(pairs, &g_hyb);
  const double e_hyb =
      testutil::max_gradient_error(hyb.parameters(), g_hyb, [&] { return hyb.loss_and_grad(pairs, nullptr); });

  const double secs = seconds_since(t0);
  Outcome out;
  out.pass = e_cnn < 1e-3 && e_mlp < 1e-3 && e_hyb < 1e-3 && secs < 60.0;
  out.detail = "max rel err cnn " + fmt("%.2e", e_cnn) + ", mlp " + fmt("%.2e", e_mlp) + ", hybrid " +
               fmt("%.2e", e_hyb) + " in " + fmt("%.2f", secs) + " s";
  return out;
}

// --- attention -------------------------------------------------------------

Outcome attention_simplex() {
  Rng rng(21);
  HybridShape shape;
  HybridModel m(shape, rng);
  int violations = 0;
  double worst_sum = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    if (trial % 100 == 0) {
      m.gate_weight() = testutil::random_mat(rng, 4, 1, 5.0);
      m.gate_bias() = testutil::random_mat(rng, 4, 1, 5.0);
    }
    FeatureBundle b;
    unsigned mask = 0;
    while (mask == 0) mask = static_cast<unsigned>(rng.below(16));
    for (std::size_t g = 0; g < kNumGroups; ++g) {
      if (mask & (1u << g)) {
        b.set(static_cast<Group>(g), testutil::random_mat(rng, shape.group_dims[g], 1, rng.uniform(0.1, 10.0)).col(0));
      }
    }
    const Vec w = m.attention(b);
    double sum = 0.0;
    for (std::size_t g = 0; g < kNumGroups; ++g) {
      const double v = w[static_cast<Eigen::Index>(g)];
      if (!(v >= 0.0)) ++violations;
      if (!b.presence[g] && v != 0.0) ++violations;
      if (b.presence[g]) sum += v;
    }
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
  }
  return {violations == 0 && worst_sum <= 1e-6,
          std::to_string(violations) + " sign/mask violations over 10000 bundles; max |sum - 1| " + fmt("%.2e", worst_sum)};
}

// --- hit rate --------------------------------------------------------------

Outcome hit_rate_calibration() {
  std::vector<std::string> universe;
  for (int i = 0; i < 2000; ++i) universe.push_back("ad" + std::to_string(i));
  Rng rng(31);
  std::vector<PairExample> test;
  for (int k = 0; k < 5000; ++k) {
    const auto a = rng.below(universe.size());
    const auto b = (a + 1 + rng.below(universe.size() - 1)) % universe.size();
    test.push_back({universe[a], universe[b], true});
  }
  HitRateOptions o;
  o.n_distractors = 100;
  o.seed = 5;
  const double hr = hit_rate(random_scorer(77), test, 10, universe, o);
  const double p = 10.0 / 101.0;
  const double se = std::sqrt(p * (1 - p) / static_cast<double>(test.size()));
  const double z = (hr - p) / se;
  return {std::abs(z) <= 3.0, "HR@10 " + fmt("%.4f", hr) + " vs " + fmt("%.4f", p) + " over 5000 trials (z = " +
                                  fmt("%.2f", z) + ")"};
}

Outcome delta_ctr_check() {
  const double d = delta_ctr(0.149, 0.223);
  return {std::abs(d - 0.497) <= 0.01, "delta_ctr(0.149, 0.223) = " + fmt("%.4f", d)};
}

// --- serving ---------------------------------------------------------------

Snapshot random_snapshot(const std::string& id, int n, int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> ids;
  std::vector<bool> active;
  for (int i = 0; i < n; ++i) {
    ids.push_back("ad" + std::to_string(i));
    active.push_back(!rng.bernoulli(0.05));
  }
  Mat reps = testutil::random_mat(rng, n, dim);
  reps.rowwise().normalize();
  return Snapshot(id, ids, reps, active);
}

std::vector<Recommendation> brute_force(const Snapshot& s, const std::string& q, int k) {
  const std::size_t qi = *s.find(q);
  const auto& r = s.representations();
  std::vector<Recommendation> all;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i == qi || !s.active(i)) continue;
    double dot = 0;
    for (Eigen::Index d = 0; d < r.cols(); ++d) dot += r(static_cast<Eigen::Index>(i), d) * r(static_cast<Eigen::Index>(qi), d);
    all.push_back({s.ids()[i], dot});
  }
  std::stable_sort(all.begin(), all.end(), [](const Recommendation& a, const Recommendation& b) {
    return a.score != b.score ? a.score > b.score : a.item_id < b.item_id;
  });
  all.resize(std::min(all.size(), static_cast<std::size_t>(k)));
  return all;
}

std::string body_of(const std::vector<Recommendation>& recs) {
  std::string out;
  for (const auto& r : recs) out += r.item_id + "\t" + format_real(r.score) + "\n";
  return out;
}

Outcome serving_exactness(const fs::path& work) {
  const Snapshot big = random_snapshot("big", 10000, 100, 41);
  Rng rng(42);
  int mismatches = 0;
  for (int q = 0; q < 200; ++q) {
    const std::string id = "ad" + std::to_string(rng.below(10000));
    const int k = 1 + static_cast<int>(rng.below(20));
    const auto got = recommend(big, id, k);
    const auto want = brute_force(big, id, k);
    bool same = got.size() == want.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) {
      same = got[i].item_id == want[i].item_id && std::abs(got[i].score - want[i].score) <= 1e-12;
    }
    if (!same) ++mismatches;
  }

  // Concurrent clients while the served snapshot flips between two versions.
  const fs::path dir = work / "swap";
  fs::remove_all(dir);
  const Snapshot a = random_snapshot("snap-a", 3000, 32, 43);
  const Snapshot b = random_snapshot("snap-b", 3000, 32, 44);
  a.save(dir / "a");
  b.save(dir / "b");
  std::vector<std::string> queries;
  for (int i = 0; i < 40; ++i) queries.push_back("ad" + std::to_string(i * 73));
  std::map<std::string, std::map<std::string, std::string>> expected;
  for (const auto& q : queries) {
    expected["snap-a"][q] = body_of(recommend(a, q, 8));
    expected["snap-b"][q] = body_of(recommend(b, q, 8));
  }

  RecommendationService svc(load_served_snapshot(dir / "a"));
  const int port = svc.bind("127.0.0.1", 0);
  svc.start();
  std::atomic<bool> done{false};
  std::atomic<int> responses{0}, mixed{0}, errors{0}, seen_a{0}, seen_b{0};
  std::vector<std::thread> clients;
  for (int c = 0; c < 4; ++c) {
    clients.emplace_back([&, c] {
      httplib::Client cli("127.0.0.1", port);
      std::size_t i = static_cast<std::size_t>(c);
      while (!done) {
        const std::string& q = queries[i++ % queries.size()];
        auto res = cli.Get("/recommendations/" + q + "?count=8");
        if (!res || res->status != 200) {
          ++errors;
          continue;
        }
        ++responses;
        const std::string sid = res->get_header_value("X-Snapshot-Id");
        auto it = expected.find(sid);
        if (it == expected.end() || it->second.at(q) != res->body) ++mixed;
        (sid == "snap-a" ? seen_a : seen_b)++;
      }
    });
  }
  httplib::Client admin("127.0.0.1", port);
  int swaps = 0;
  for (int s = 0; s < 40; ++s) {
    auto res = admin.Post("/admin/reload?dir=" + (dir / (s % 2 ? "a" : "b")).string(), "", "text/plain");
    if (res && res->status == 204) ++swaps;
    std::this_thread::sleep_for(std::chrono::milliseconds(15));
  }
  done = true;
  for (auto& t : clients) t.join();
  svc.stop();

  Outcome out;
  out.pass = mismatches == 0 && mixed == 0 && errors == 0 && swaps == 40 && seen_a > 0 && seen_b > 0;
  out.detail = std::to_string(mismatches) + " of 200 queries differ from brute force on 10^4 items; " +
               std::to_string(responses.load()) + " concurrent responses across " + std::to_string(swaps) +
               " swaps, " + std::to_string(mixed.load()) + " mixed, " + std::to_string(errors.load()) + " errors";
  return out;
}

// --- fixture pipeline ------------------------------------------------------

struct Pipeline {
  fs::path data;
  fs::path out;
  double synth_secs = 0;
  double refresh_secs = 0;
  std::uint64_t eval_seed = 0;
  RefreshConfig cfg;
};

Pipeline build_fixture(const fs::path& fixture, const fs::path& work) {
  Pipeline p;
  const Manifest seeds = Manifest::read(fixture / "SEEDS");
  p.data = work / "data";
  p.out = work / "out";
  p.eval_seed = static_cast<std::uint64_t>(seeds.get_int("eval"));
  fs::remove_all(p.data);
  fs::remove_all(p.out);

  auto t0 = Clock::now();
  SynthConfig sc = load_synth_config(fixture / "synth.cfg");
  sc.seed = static_cast<std::uint64_t>(seeds.get_int("synth"));
  write_synth(p.data, generate(sc));
  p.synth_secs = seconds_since(t0);

  p.cfg.data_dir = p.data;
  p.cfg.out_dir = p.out;
  p.cfg.seed = static_cast<std::uint64_t>(seeds.get_int("refresh"));
  apply_refresh_overrides(p.cfg, fixture / "refresh.cfg");
  t0 = Clock::now();
  refresh(p.cfg);
  p.refresh_secs = seconds_since(t0);
  return p;
}

struct Scorers {
  AdCorpus ads;
  std::vector<std::string> universe;
  EmbeddingTable cf, text, hybrid;
  fs::path snapshot_dir;
};

Scorers load_scorers(const Pipeline& p) {
  Scorers s;
  s.ads = load_ads(p.data / "ads.tsv");
  for (const auto& ad : s.ads) {
    if (ad.active) s.universe.push_back(ad.item_id);
  }
  s.snapshot_dir = resolve_snapshot_dir(p.out);
  const Snapshot snap = Snapshot::load(s.snapshot_dir);
  s.hybrid = EmbeddingTable(snap.ids(), Mat(snap.representations()));
  s.cf = FactorModel::load(p.out / "artifacts/als").col_table();
  const auto wv = WordVectors::load(p.out / "artifacts/word_vectors");
  s.text = text_embed_all(s.ads, TextClassifier::load(p.out / "artifacts/text_cnn"), wv);
  return s;
}

Outcome hybrid_vs_modules(const Pipeline& p, const Scorers& s) {
  const auto t0 = Clock::now();
  std::vector<PairExample> test;
  for (const auto& pr : load_pairs(s.snapshot_dir / "test_pairs.tsv")) {
    if (pr.positive) test.push_back(pr);
  }
  HitRateOptions o;
  o.seed = p.eval_seed;
  const double cf = hit_rate(embedding_scorer(s.cf, p.eval_seed), test, 10, s.universe, o);
  const double text = hit_rate(embedding_scorer(s.text, p.eval_seed), test, 10, s.universe, o);
  const double hyb = hit_rate(embedding_scorer(s.hybrid, p.eval_seed), test, 10, s.universe, o);
  const double total = p.synth_secs + p.refresh_secs + seconds_since(t0);
  Outcome out;
  out.pass = hyb >= std::max(cf, text) - 0.02 && hyb >= text + 0.05 && total < 600.0;
  out.detail = "HR@10 on " + std::to_string(test.size()) + " test pairs: hybrid " + fmt("%.4f", hyb) + ", cf " +
               fmt("%.4f", cf) + ", text " + fmt("%.4f", text) + "; synth+refresh+eval " + fmt("%.1f", total) + " s";
  return out;
}

Outcome cold_start(const Pipeline& p, const Scorers& s) {
  // Every item without behaviour factors must still get a representation.
  const HybridModel model = HybridModel::load(s.snapshot_dir / "hybrid");
  const auto wv = WordVectors::load(p.out / "artifacts/word_vectors");
  const EmbeddingTable image = image_embed_all(load_image_features(p.data / "images.imgf"),
                                               ImageProjector::load(p.out / "artifacts/image_projector"));
  const EmbeddingTable location = EmbeddingTable::load(p.out / "artifacts/location");
  BundleSources src;
  src.ads = &s.ads;
  src.cf = &s.cf;
  src.text = &s.text;
  src.image = &image;
  src.location = &location;
  std::size_t cold = 0, represented = 0, cold_active = 0, served = 0;
  for (const auto& ad : s.ads) {
    if (s.cf.contains(ad.item_id)) continue;
    ++cold;
    const Vec r = model.represent(assemble(ad.item_id, src));
    if (r.allFinite() && std::abs(r.norm() - 1.0) < 1e-6) ++represented;
    if (ad.active) {
      ++cold_active;
      if (s.hybrid.contains(ad.item_id)) ++served;
    }
  }

  std::set<std::string> active(s.universe.begin(), s.universe.end());
  std::vector<PairExample> anchored;
  for (auto pr : build_pairs(load_events(p.data / "holdout_events.tsv"))) {
    if (!active.count(pr.item_a) || !active.count(pr.item_b)) continue;
    if (!s.cf.contains(pr.item_a)) anchored.push_back(pr);
    if (!s.cf.contains(pr.item_b)) anchored.push_back({pr.item_b, pr.item_a, true});
  }
  HitRateOptions o;
  o.seed = p.eval_seed;
  const double cf = hit_rate(embedding_scorer(s.cf, p.eval_seed), anchored, 10, s.universe, o);
  const double hyb = hit_rate(embedding_scorer(s.hybrid, p.eval_seed), anchored, 10, s.universe, o);
  Outcome out;
  out.pass = cold > 0 && represented == cold && served == cold_active && hyb - cf >= 0.10;
  out.detail = std::to_string(represented) + "/" + std::to_string(cold) + " cold items represented (" +
               std::to_string(served) + "/" + std::to_string(cold_active) + " active served); HR@10 on " +
               std::to_string(anchored.size()) + " cold-anchored pairs: hybrid " + fmt("%.4f", hyb) + ", cf " +
               fmt("%.4f", cf);
  return out;
}

Outcome determinism(const Pipeline& p, const fs::path& work) {
  RefreshConfig again = p.cfg;
  again.out_dir = work / "out-repeat";
  fs::remove_all(again.out_dir);
  const auto r = refresh(again);
  const std::string first = read_file(resolve_snapshot_dir(p.out) / "manifest");
  const std::string second = read_file(r.snapshot_dir / "manifest");
  return {first == second, std::string(first == second ? "identical" : "different") + " snapshot manifests (" +
                               std::to_string(first.size()) + " bytes) across two refresh runs with seed " +
                               std::to_string(p.cfg.seed)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  fs::path work = fs::temp_directory_path() / "hybridrec-acceptance";
  fs::path fixture = HYBRIDREC_FIXTURE_DIR;
  app.add_option("--work", work, "scratch directory");
  app.add_option("--fixture", fixture, "fixture directory");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  run("als_correctness", als_correctness);
  run("gradient_suite", gradient_suite);
  run("attention_simplex", attention_simplex);

  std::optional<Pipeline> pipeline;
  std::optional<Scorers> scorers;
  std::string pipeline_error;
  try {
    pipeline = build_fixture(fixture, work);
    scorers = load_scorers(*pipeline);
  } catch (const std::exception& e) {
    pipeline_error = std::string("fixture pipeline failed: ") + e.what();
  }
  auto with_pipeline = [&](const std::string& name, auto f) {
    if (!pipeline || !scorers) {
      report(name, {false, pipeline_error});
      return;
    }
    run(name, [&] { return f(); });
  };
  with_pipeline("cold_start_coverage", [&] { return cold_start(*pipeline, *scorers); });
  with_pipeline("hybrid_vs_single_modules", [&] { return hybrid_vs_modules(*pipeline, *scorers); });

  run("hit_rate_calibration", hit_rate_calibration);
  run("serving_exactness", [&] { return serving_exactness(work); });
  run("delta_ctr", delta_ctr_check);
  with_pipeline("determinism", [&] { return determinism(*pipeline, work); });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
