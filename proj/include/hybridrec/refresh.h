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

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hybridrec/datamodel.h"
#include "hybridrec/hybrid.h"
#include "hybridrec/imagepipe.h"
#include "hybridrec/mf.h"
#include "hybridrec/textpipe.h"

namespace hybridrec {

/// Staged training refresh.
///
/// Input directory: ads.tsv, events.tsv, images.imgf and optionally
/// weights.cfg. Output directory layout:
///
///   artifacts/<name>/      stage-1 modules, each with a fingerprinted manifest
///   staging/               stage-2 and stage-3 work area for the current run
///   snapshots/<id>/        finished snapshots (manifest, index, hybrid model)
///   CURRENT                name of the served snapshot directory
///
/// CURRENT is replaced by rename only after the new snapshot is complete, so
/// a failing run leaves the previous snapshot in place.
struct RefreshConfig {
  fs::path data_dir;
  fs::path out_dir;
  bool reuse = false;
  std::uint64_t seed = 0;

  int lookback_days = 20;
  int negative_ratio = 4;
  double holdout_fraction = 0.2;  // positives held out to test_pairs.tsv

  AlsOptions als;
  AlsOptions location = location_als_options();
  Word2VecOptions word2vec;
  CnnOptions cnn;
  MlpOptions mlp;
  HybridOptions hybrid;

  // Invoked after each named step has persisted its outputs.
  std::function<void(const std::string& step, const fs::path& work_dir)> after_step;
  bool verbose = false;
};

inline const std::vector<std::string>& stage1_artifacts() {
  static const std::vector<std::string> names = {"als", "location", "word_vectors", "text_cnn", "image_projector"};
  return names;
}

struct RefreshResult {
  std::string snapshot_id;
  fs::path snapshot_dir;
  std::vector<std::string> trained;  // stage-1 artifacts trained in this run
  std::vector<std::string> reused;   // stage-1 artifacts loaded unchanged
};

RefreshResult refresh(const RefreshConfig& cfg);

/// Reads `key=value` overrides (e.g. `als.rank=32`, `hybrid.epochs=5`) into cfg.
void apply_refresh_overrides(RefreshConfig& cfg, const fs::path& path);

}  // namespace hybridrec
