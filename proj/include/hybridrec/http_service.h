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

#include <memory>
#include <string>
#include <thread>

#include "hybridrec/snapshot.h"

namespace httplib {
class Server;
}

namespace hybridrec {

/// Read-only recommendation endpoint over a hot-swappable snapshot.
///
///   GET  /recommendations/{item_id}?count=K   text/plain "item\tscore" lines
///   GET  /healthz                             served snapshot id
///   POST /admin/reload?dir=PATH               swap to another snapshot
class RecommendationService {
 public:
  explicit RecommendationService(std::shared_ptr<const Snapshot> initial);
  ~RecommendationService();
  RecommendationService(const RecommendationService&) = delete;
  RecommendationService& operator=(const RecommendationService&) = delete;

  SnapshotHolder& holder() { return holder_; }

  /// Binds host:port (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves on the calling thread until stop().
  void run();
  /// Serves on a background thread.
  void start();
  void stop();

 private:
  void install_routes();

  SnapshotHolder holder_;
  std::unique_ptr<httplib::Server> server_;
  std::thread worker_;
};

/// Loads the snapshot a directory resolves to.
std::shared_ptr<const Snapshot> load_served_snapshot(const fs::path& dir);

}  // namespace hybridrec
