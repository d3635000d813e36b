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

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hybridrec/eval.h"
#include "hybridrec/refresh.h"
#include "hybridrec/snapshot.h"
#include "hybridrec/synthgen.h"
#include "hybridrec/textpipe.h"

namespace py = pybind11;
using namespace hybridrec;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hybrid item-to-item recommender";
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("n_users", &SynthConfig::n_users)
      .def_readwrite("n_items", &SynthConfig::n_items)
      .def_readwrite("n_categories", &SynthConfig::n_categories)
      .def_readwrite("n_subcats_per_category", &SynthConfig::n_subcats_per_category)
      .def_readwrite("n_postcodes", &SynthConfig::n_postcodes)
      .def_readwrite("n_location_clusters", &SynthConfig::n_location_clusters)
      .def_readwrite("vocab_size", &SynthConfig::vocab_size)
      .def_readwrite("image_dim", &SynthConfig::image_dim)
      .def_readwrite("days", &SynthConfig::days)
      .def_readwrite("holdout_days", &SynthConfig::holdout_days)
      .def_readwrite("seed", &SynthConfig::seed)
      .def_readwrite("cold_start_fraction", &SynthConfig::cold_start_fraction)
      .def_readwrite("inactive_fraction", &SynthConfig::inactive_fraction)
      .def("validate", &SynthConfig::validate);

  m.def("load_synth_config", &load_synth_config, py::arg("path"));
  m.def(
      "synth",
      [](const SynthConfig& cfg, const fs::path& out) {
        const SynthData d = generate(cfg);
        write_synth(out, d);
        py::dict stats;
        stats["ads"] = d.ads.size();
        stats["events"] = d.events.size();
        stats["holdout_events"] = d.holdout_events.size();
        return stats;
      },
      py::arg("config"), py::arg("out"), "Generate a synthetic marketplace into out.");

  m.def(
      "refresh",
      [](const fs::path& data, const fs::path& out, std::uint64_t seed, bool reuse,
         std::optional<fs::path> overrides) {
        RefreshConfig cfg;
        cfg.data_dir = data;
        cfg.out_dir = out;
        cfg.seed = seed;
        cfg.reuse = reuse;
        if (overrides) apply_refresh_overrides(cfg, *overrides);
        RefreshResult r;
        {
          py::gil_scoped_release release;
          r = refresh(cfg);
        }
        py::dict d;
        d["snapshot_id"] = r.snapshot_id;
        d["snapshot_dir"] = r.snapshot_dir;
        d["trained"] = r.trained;
        d["reused"] = r.reused;
        return d;
      },
      py::arg("data"), py::arg("out"), py::arg("seed") = 0, py::arg("reuse") = false,
      py::arg("overrides") = py::none());

  py::class_<Snapshot, std::shared_ptr<Snapshot>>(m, "Snapshot")
      .def_static(
          "load", [](const fs::path& dir) { return std::make_shared<Snapshot>(Snapshot::load(resolve_snapshot_dir(dir))); },
          py::arg("dir"))
      .def_property_readonly("id", &Snapshot::id)
      .def_property_readonly("ids", &Snapshot::ids)
      .def_property_readonly("dim", &Snapshot::dim)
      .def_property_readonly("representations", &Snapshot::representations)
      .def("__len__", &Snapshot::size)
      .def("__contains__", [](const Snapshot& s, const std::string& id) { return s.find(id).has_value(); })
      .def(
          "recommend",
          [](const Snapshot& s, const std::string& item, int k) {
            std::vector<std::pair<std::string, double>> out;
            for (const auto& r : recommend(s, item, k)) out.emplace_back(r.item_id, r.score);
            return out;
          },
          py::arg("item_id"), py::arg("k") = kDefaultRecommendations);

  m.def(
      "hit_rate",
      [](const Snapshot& s, const std::vector<std::pair<std::string, std::string>>& pairs, int n, int distractors,
         std::uint64_t seed) {
        const EmbeddingTable table(s.ids(), Mat(s.representations()));
        std::vector<PairExample> test;
        for (const auto& [a, b] : pairs) test.push_back({a, b, true});
        std::vector<std::string> universe;
        for (std::size_t i = 0; i < s.size(); ++i) {
          if (s.active(i)) universe.push_back(s.ids()[i]);
        }
        HitRateOptions o;
        o.n_distractors = distractors;
        o.seed = seed;
        return hybridrec::hit_rate(embedding_scorer(table, seed), test, n, universe, o);
      },
      py::arg("snapshot"), py::arg("pairs"), py::arg("n") = 10, py::arg("distractors") = 100, py::arg("seed") = 0,
      "HR@n of the snapshot's cosine scores over (anchor, partner) pairs.");

  m.def("delta_ctr", &delta_ctr, py::arg("ctr_a"), py::arg("ctr_b"));
  m.def("tokenize", &tokenize, py::arg("text"));
}
