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

#include "hybridrec/http_service.h"

#include <charconv>

#include "httplib.h"

namespace hybridrec {

namespace {

std::optional<int> parse_count(const std::string& s) {
  int v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || v < 1) return std::nullopt;
  return v;
}

}  // namespace

std::shared_ptr<const Snapshot> load_served_snapshot(const fs::path& dir) {
  return std::make_shared<const Snapshot>(Snapshot::load(resolve_snapshot_dir(dir)));
}

RecommendationService::RecommendationService(std::shared_ptr<const Snapshot> initial)
    : holder_(std::move(initial)), server_(std::make_unique<httplib::Server>()) {
  if (!holder_.get()) throw Error("service needs a snapshot");
  install_routes();
}

RecommendationService::~RecommendationService() { stop(); }

void RecommendationService::install_routes() {
  server_->Get(R"(/recommendations/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    // One handle per request: a concurrent reload never mixes snapshots.
    const auto snap = holder_.get();
    res.set_header("X-Snapshot-Id", snap->id());
    int count = kDefaultRecommendations;
    if (req.has_param("count")) {
      const auto parsed = parse_count(req.get_param_value("count"));
      if (!parsed) {
        res.status = 400;
        res.set_content("count must be a positive integer\n", "text/plain");
        return;
      }
      count = *parsed;
    }
    const std::string item = req.matches[1];
    if (!snap->find(item)) {
      res.status = 404;
      res.set_content("unknown item " + item + "\n", "text/plain");
      return;
    }
    std::string body;
    for (const auto& r : recommend(*snap, item, count)) body += r.item_id + "\t" + format_real(r.score) + "\n";
    res.status = 200;
    res.set_content(body, "text/plain");
  });

  server_->Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    const auto snap = holder_.get();
    res.set_header("X-Snapshot-Id", snap->id());
    res.set_content(snap->id() + "\n", "text/plain");
  });

  server_->Post("/admin/reload", [this](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("dir")) {
      res.status = 400;
      res.set_content("missing dir parameter\n", "text/plain");
      return;
    }
    try {
      holder_.set(load_served_snapshot(req.get_param_value("dir")));
      res.status = 204;
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(std::string(e.what()) + "\n", "text/plain");
    }
    res.set_header("X-Snapshot-Id", holder_.get()->id());
  });
}

int RecommendationService::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void RecommendationService::run() { server_->listen_after_bind(); }

void RecommendationService::start() {
  worker_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void RecommendationService::stop() {
  if (server_) server_->stop();
  if (worker_.joinable()) worker_.join();
}

}  // namespace hybridrec
