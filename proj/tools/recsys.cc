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

// recsys: command-line front end for data generation, refresh, evaluation
// and serving.

#include <csignal>
#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "hybridrec/eval.h"
#include "hybridrec/http_service.h"
#include "hybridrec/refresh.h"
#include "hybridrec/synthgen.h"

namespace hr = hybridrec;

namespace {

hr::RecommendationService* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

std::vector<int> parse_ns(const std::string& spec) {
  std::vector<int> ns;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != part.size() || part.empty() || v < 1) throw hr::Error("bad --n value '" + part + "'");
    ns.push_back(v);
  }
  if (ns.empty()) throw hr::Error("--n needs at least one value");
  return ns;
}

int run_synth(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed) {
  hr::SynthConfig cfg = config.empty() ? hr::SynthConfig() : hr::load_synth_config(config);
  if (seed) cfg.seed = *seed;
  const auto data = hr::generate(cfg);
  hr::write_synth(out, data);
  std::cout << "wrote " << data.ads.size() << " ads, " << data.events.size() << " events, "
            << data.holdout_events.size() << " holdout events to " << out << "\n";
  return 0;
}

int run_refresh(hr::RefreshConfig cfg, const std::string& overrides) {
  if (!overrides.empty()) hr::apply_refresh_overrides(cfg, overrides);
  const auto res = hr::refresh(cfg);
  std::cout << "snapshot " << res.snapshot_id << " at " << res.snapshot_dir.string() << "\n";
  auto list = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
    return s.empty() ? std::string("-") : s;
  };
  std::cout << "trained: " << list(res.trained) << "\nreused: " << list(res.reused) << "\n";
  return 0;
}

int run_eval(const std::string& model, std::string pairs, const std::string& ns_spec, int distractors,
             std::uint64_t seed, const std::string& report) {
  const hr::fs::path dir = hr::resolve_snapshot_dir(model);
  const hr::Snapshot snap = hr::Snapshot::load(dir);
  if (pairs.empty()) pairs = (dir / "test_pairs.tsv").string();
  std::vector<hr::PairExample> test;
  for (const auto& p : hr::load_pairs(pairs)) {
    if (p.positive) test.push_back(p);
  }
  std::vector<std::string> universe;
  for (std::size_t i = 0; i < snap.size(); ++i) {
    if (snap.active(i)) universe.push_back(snap.ids()[i]);
  }
  const hr::EmbeddingTable table(snap.ids(), snap.representations());
  hr::HitRateOptions opts;
  opts.n_distractors = distractors;
  opts.seed = seed;

  hr::EvalReport rep;
  rep.model_id = snap.id();
  rep.seed = seed;
  rep.test_pairs = test.size();
  rep.candidate_set_size = distractors + 1;
  const auto ns = parse_ns(ns_spec);
  const auto rates = hr::hit_rates(hr::embedding_scorer(table), test, ns, universe, opts);
  for (std::size_t i = 0; i < ns.size(); ++i) rep.hit_rates.emplace_back(ns[i], rates[i]);
  if (hr::fs::exists(dir / "hybrid" / "manifest")) {
    rep.importance = hr::feature_importance(hr::HybridModel::load(dir / "hybrid"));
  }
  std::cout << rep.summary();
  if (!report.empty()) rep.to_manifest().write(report);
  return 0;
}

int run_serve(std::string snapshot, const std::string& host, int port) {
  if (snapshot.empty()) {
    const char* env = std::getenv("RECSYS_SNAPSHOT_DIR");
    if (!env || !*env) throw hr::Error("no --snapshot given and RECSYS_SNAPSHOT_DIR is unset");
    snapshot = env;
  }
  hr::RecommendationService service(hr::load_served_snapshot(snapshot));
  const int bound = service.bind(host, port);
  std::cout << "serving " << service.holder().get()->id() << " on " << host << ":" << bound << std::endl;
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  service.run();
  g_service = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid item-to-item recommender"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate a synthetic marketplace dataset");
  std::string synth_config, synth_out;
  std::optional<std::uint64_t> synth_seed;
  synth->add_option("--config", synth_config, "generator config (key=value)");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_seed, "overrides the config seed");

  auto* refresh = app.add_subcommand("refresh", "train all modules and publish a snapshot");
  hr::RefreshConfig rcfg;
  std::string data_dir, out_dir, overrides;
  refresh->add_option("--data", data_dir, "directory with events.tsv, ads.tsv, images.imgf")->required();
  refresh->add_option("--out", out_dir, "output directory")->required();
  refresh->add_flag("--reuse", rcfg.reuse, "reuse stage-1 artifacts with matching fingerprints");
  refresh->add_option("--seed", rcfg.seed, "master seed");
  refresh->add_option("--config", overrides, "training overrides (key=value)");
  refresh->add_flag("-v,--verbose", rcfg.verbose, "log progress to stderr");

  auto* serve = app.add_subcommand("serve", "serve recommendations over HTTP");
  std::string serve_snapshot, host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--snapshot", serve_snapshot, "snapshot or refresh output directory");
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "port (0 picks a free one)");

  auto* eval = app.add_subcommand("eval", "hit rate of a snapshot on held-out pairs");
  std::string model, pairs, ns = "1,5,10", report;
  int distractors = 100;
  std::uint64_t eval_seed = 0;
  eval->add_option("--model", model, "snapshot or refresh output directory")->required();
  eval->add_option("--pairs", pairs, "pairs file (default: the snapshot's test_pairs.tsv)");
  eval->add_option("--n", ns, "comma-separated cutoffs");
  eval->add_option("--distractors", distractors, "distractors per test pair")->check(CLI::PositiveNumber);
  eval->add_option("--seed", eval_seed, "distractor seed");
  eval->add_option("--report", report, "write a key=value report here");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*synth) return run_synth(synth_config, synth_out, synth_seed);
    if (*refresh) {
      rcfg.data_dir = data_dir;
      rcfg.out_dir = out_dir;
      return run_refresh(rcfg, overrides);
    }
    if (*serve) return run_serve(serve_snapshot, host, port);
    if (*eval) return run_eval(model, pairs, ns, distractors, eval_seed, report);
  } catch (const std::exception& e) {
    std::cerr << "recsys: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
