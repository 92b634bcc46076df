// Copyright 2026 The Siteplan Authors. All Rights Reserved.
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

// Recommendation requests and the JSON-over-HTTP service.
//
// Endpoints live under /v1: GET health, GET catalog, POST validate,
// POST extract and POST recommend. Bodies are JSON; heatmaps travel as
// base64 little-endian float32, row-major, with their dims.

#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>

#include "json.hpp"
#include "siteplan/checkpoint.hpp"
#include "siteplan/graph.hpp"
#include "siteplan/heatmap.hpp"
#include "siteplan/metrics.hpp"
#include "siteplan/relnet.hpp"
#include "siteplan/scene.hpp"

namespace siteplan {

struct RecommendOptions {
  DecodeMode mode = DecodeMode::kArgmax;
  std::uint64_t seed = 0;
  int target_size = 0;  // 0: scaled default

  static RecommendOptions FromJson(const nlohmann::json& doc);
};

struct Recommendation {
  RelationGraph graph;
  EdgeSample edges;
  DecodedHeatmap heatmap;
  Heatmap display;
  Validity validity;
  std::pair<int, int> peak{0, 0};
};

// Throws kInvalidScene (violations in the message) for invalid scenes and
// scenes without nodes, kTooLarge above the model's node limit.
Recommendation Recommend(const RelationModel& model, const Catalog& catalog, const Scene& scene,
                         const RecommendOptions& options);

nlohmann::json HeatmapToJson(const Heatmap& map);
nlohmann::json RecommendationToJson(const Recommendation& rec, const std::string& checkpoint_id,
                                    double latency_ms);

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string checkpoint;
  int workers = 2;                   // concurrent requests
  std::size_t max_body = 8u << 20;  // bytes

  static ServiceConfig FromJson(const nlohmann::json& doc);
  static nlohmann::json ToJson(const ServiceConfig& config);
  // SITEPLAN_PORT and SITEPLAN_CHECKPOINT override the file.
  void ApplyEnvironment();
};

struct HttpResult {
  int status = 200;
  nlohmann::json body;
};

class Service {
 public:
  Service(Catalog catalog, ServiceConfig config);
  ~Service();

  // Installs a loaded model; until then health reports 503 and recommend
  // is unavailable.
  void SetModel(Checkpoint checkpoint);
  bool ready() const { return ready_.load(); }

  // Request handling without sockets; the server routes through this.
  HttpResult Handle(const std::string& method, const std::string& path, const std::string& body) const;

  // Binds and serves until Stop(). Loads config.checkpoint in the
  // background when no model is installed. Returns false if binding fails.
  bool Run();
  void Stop();
  int bound_port() const { return bound_port_.load(); }

 private:
  HttpResult Recommend(const nlohmann::json& request) const;

  Catalog catalog_;
  ServiceConfig config_;
  std::shared_ptr<const Checkpoint> checkpoint_;
  mutable std::mutex model_mutex_;  // guards checkpoint_ installation only
  std::atomic<bool> ready_{false};
  std::atomic<int> bound_port_{0};
  struct Server;
  std::unique_ptr<Server> server_;
};

}  // namespace siteplan
