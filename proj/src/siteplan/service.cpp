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

#include "siteplan/service.hpp"

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <thread>

#include "httplib.h"
#include "siteplan/error.hpp"
#include "siteplan/hash.hpp"
#include "siteplan/render.hpp"
#include "siteplan/scene_io.hpp"

namespace siteplan {

RecommendOptions RecommendOptions::FromJson(const nlohmann::json& doc) {
  RecommendOptions o;
  if (doc.is_null()) return o;
  try {
    const std::string mode = doc.value("mode", std::string("argmax"));
    if (mode == "argmax") {
      o.mode = DecodeMode::kArgmax;
    } else if (mode == "sample") {
      o.mode = DecodeMode::kSample;
    } else {
      Fail(ErrorCode::kInvalidArgument, "unknown decode mode '" + mode + "'");
    }
    o.seed = doc.value("seed", o.seed);
    o.target_size = doc.value("target_size", o.target_size);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, std::string("options: ") + e.what());
  }
  if (o.target_size < 0) Fail(ErrorCode::kInvalidArgument, "target_size must be non-negative");
  return o;
}

Recommendation Recommend(const RelationModel& model, const Catalog& catalog, const Scene& scene,
                         const RecommendOptions& options) {
  const auto violations = ValidateScene(scene, &catalog);
  if (!violations.empty()) {
    Fail(ErrorCode::kInvalidScene, "scene is invalid: " + ViolationsToJson(violations).dump());
  }
  Recommendation rec;
  rec.graph = BuildGraph(scene, catalog);
  if (rec.graph.size() == 0) Fail(ErrorCode::kInvalidScene, "scene has no units to condition on");
  if (rec.graph.size() > model.config().max_nodes) {
    Fail(ErrorCode::kTooLarge, "scene graph has " + std::to_string(rec.graph.size()) +
                                   " nodes, limit " + std::to_string(model.config().max_nodes));
  }
  EdgeDistribution dist;
  if (model.config().use_visual) {
    const SiteImage image = RenderTopdown(scene, catalog, model.config().image_resolution);
    dist = model.Predict(rec.graph, &image);
  } else {
    dist = model.Predict(rec.graph, nullptr);
  }
  rec.edges = SampleEdges(dist, options.mode, options.seed);
  std::vector<int> nodes, types;
  for (const auto& e : rec.edges.edges) {
    nodes.push_back(e.node);
    types.push_back(e.edge_type);
  }
  const int size = options.target_size > 0 ? options.target_size : DefaultTargetSize(scene.grid_w);
  rec.heatmap = EdgesToHeatmap(PredictedHeatmapEdges(rec.graph, nodes, types), scene.grid_w,
                               scene.grid_h, size, size);
  rec.display = Postprocess(rec.heatmap.map);
  rec.validity = PlacementValidity(rec.heatmap.map, scene);
  rec.peak = rec.heatmap.map.peak();
  return rec;
}

nlohmann::json HeatmapToJson(const Heatmap& map) {
  return {{"width", map.width},
          {"height", map.height},
          {"encoding", "base64-f32le"},
          {"data", EncodeHeatmapPayload(map)}};
}

nlohmann::json RecommendationToJson(const Recommendation& rec, const std::string& checkpoint_id,
                                    double latency_ms) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : rec.edges.edges) {
    const RelationNode& n = rec.graph.nodes[static_cast<size_t>(e.node)];
    edges.push_back({{"source_node", e.node},
                     {"source_units", n.member_unit_ids},
                     {"edge_type", e.edge_type},
                     {"direction", DirectionName(TypeDirection(e.edge_type))},
                     {"distance_bin", DistanceBinName(TypeBin(e.edge_type))}});
  }
  return {{"heatmap", HeatmapToJson(rec.heatmap.map)},
          {"display_heatmap", HeatmapToJson(rec.display)},
          {"edges", edges},
          {"empty", rec.edges.empty},
          {"mixture", rec.edges.mixture},
          {"peak", {{"x", rec.peak.first}, {"y", rec.peak.second}}},
          {"validity",
           {{"forbidden_overlap", rec.validity.forbidden_overlap},
            {"collision_overlap", rec.validity.collision_overlap}}},
          {"graph_nodes", rec.graph.size()},
          {"checkpoint_id", checkpoint_id},
          {"latency_ms", latency_ms}};
}

ServiceConfig ServiceConfig::FromJson(const nlohmann::json& doc) {
  ServiceConfig c;
  try {
    c.host = doc.value("host", c.host);
    c.port = doc.value("port", c.port);
    c.checkpoint = doc.value("checkpoint", c.checkpoint);
    c.workers = doc.value("workers", c.workers);
    c.max_body = doc.value("max_body", c.max_body);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, std::string("service config: ") + e.what());
  }
  if (c.port < 0 || c.port > 65535) Fail(ErrorCode::kInvalidArgument, "port out of range");
  if (c.workers < 1) Fail(ErrorCode::kInvalidArgument, "workers must be positive");
  return c;
}

nlohmann::json ServiceConfig::ToJson(const ServiceConfig& c) {
  return {{"host", c.host},
          {"port", c.port},
          {"checkpoint", c.checkpoint},
          {"workers", c.workers},
          {"max_body", c.max_body}};
}

void ServiceConfig::ApplyEnvironment() {
  if (const char* port_env = std::getenv("SITEPLAN_PORT")) {
    try {
      port = std::stoi(port_env);
    } catch (const std::exception&) {
      Fail(ErrorCode::kInvalidArgument, "SITEPLAN_PORT is not a number");
    }
  }
  if (const char* ck = std::getenv("SITEPLAN_CHECKPOINT")) checkpoint = ck;
}

struct Service::Server {
  httplib::Server http;
  std::thread loader;
};

Service::Service(Catalog catalog, ServiceConfig config)
    : catalog_(std::move(catalog)), config_(std::move(config)) {}

Service::~Service() {
  Stop();
  if (server_ && server_->loader.joinable()) server_->loader.join();
}

void Service::SetModel(Checkpoint checkpoint) {
  auto shared = std::make_shared<const Checkpoint>(std::move(checkpoint));
  std::lock_guard<std::mutex> lock(model_mutex_);
  checkpoint_ = std::move(shared);
  ready_.store(true);
}

namespace {

HttpResult ErrorResult(int status, const std::string& kind, const std::string& message) {
  return {status, {{"error", kind}, {"message", message}}};
}

std::string NextErrorId() {
  static std::atomic<std::uint64_t> counter{0};
  const auto now = std::chrono::steady_clock::now().time_since_epoch().count();
  return HexU64(Fnv1a(std::to_string(now) + ":" + std::to_string(counter.fetch_add(1))));
}

}  // namespace

HttpResult Service::Recommend(const nlohmann::json& request) const {
  std::shared_ptr<const Checkpoint> ck;
  {
    std::lock_guard<std::mutex> lock(model_mutex_);
    ck = checkpoint_;
  }
  if (!ck) return ErrorResult(503, "unavailable", "model is still loading");
  if (!request.is_object() || !request.contains("scene")) {
    return ErrorResult(400, "bad_request", "request must carry a scene");
  }
  const Scene scene = SceneFromJson(request.at("scene"));
  const auto violations = ValidateScene(scene, &catalog_);
  if (!violations.empty()) {
    return {422, {{"error", "invalid_scene"}, {"violations", ViolationsToJson(violations)}}};
  }
  const RecommendOptions options = RecommendOptions::FromJson(request.value("options", nlohmann::json()));
  const auto start = std::chrono::steady_clock::now();
  const Recommendation rec = siteplan::Recommend(*ck->model, catalog_, scene, options);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return {200, RecommendationToJson(rec, ck->id, ms)};
}

HttpResult Service::Handle(const std::string& method, const std::string& path,
                           const std::string& body) const {
  try {
    if (path == "/v1/health") {
      if (method != "GET") return ErrorResult(405, "method_not_allowed", method);
      if (!ready()) return {503, {{"status", "loading"}, {"checkpoint_id", nullptr}}};
      std::lock_guard<std::mutex> lock(model_mutex_);
      return {200, {{"status", "ok"}, {"checkpoint_id", checkpoint_->id}}};
    }
    if (path == "/v1/catalog") {
      if (method != "GET") return ErrorResult(405, "method_not_allowed", method);
      return {200, CatalogToJson(catalog_)};
    }
    if (path != "/v1/validate" && path != "/v1/extract" && path != "/v1/recommend") {
      return ErrorResult(404, "not_found", path);
    }
    if (method != "POST") return ErrorResult(405, "method_not_allowed", method);
    nlohmann::json request;
    try {
      request = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      return ErrorResult(400, "bad_request", e.what());
    }
    if (path == "/v1/recommend") return Recommend(request);
    const Scene scene = SceneFromJson(request.contains("scene") ? request.at("scene") : request);
    const auto violations = ValidateScene(scene, &catalog_);
    if (path == "/v1/validate") {
      return {200, {{"valid", violations.empty()}, {"violations", ViolationsToJson(violations)}}};
    }
    if (!violations.empty()) {
      return {422, {{"error", "invalid_scene"}, {"violations", ViolationsToJson(violations)}}};
    }
    return {200, GraphToJson(BuildGraph(scene, catalog_))};
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::kParse:
      case ErrorCode::kInvalidArgument:
        return ErrorResult(422, "invalid_request", e.what());
      case ErrorCode::kInvalidScene:
        return ErrorResult(422, "invalid_scene", e.what());
      case ErrorCode::kTooLarge:
        return ErrorResult(413, "too_large", e.what());
      default:
        break;
    }
    const std::string id = NextErrorId();
    std::cerr << "siteplan: request " << id << " failed: " << e.what() << '\n';
    return ErrorResult(500, "internal", id);
  } catch (const std::exception& e) {
    const std::string id = NextErrorId();
    std::cerr << "siteplan: request " << id << " failed: " << e.what() << '\n';
    return ErrorResult(500, "internal", id);
  }
}

bool Service::Run() {
  server_ = std::make_unique<Server>();
  httplib::Server& http = server_->http;
  const int workers = config_.workers;
  http.new_task_queue = [workers] { return new httplib::ThreadPool(static_cast<size_t>(workers)); };
  http.set_payload_max_length(config_.max_body);
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const HttpResult r = Handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  for (const char* p : {"/v1/health", "/v1/catalog"}) http.Get(p, route);
  for (const char* p : {"/v1/validate", "/v1/extract", "/v1/recommend"}) http.Post(p, route);
  if (config_.port == 0) {
    const int port = http.bind_to_any_port(config_.host);
    if (port < 0) return false;
    bound_port_.store(port);
  } else {
    if (!http.bind_to_port(config_.host, config_.port)) return false;
    bound_port_.store(config_.port);
  }
  if (!ready() && !config_.checkpoint.empty()) {
    server_->loader = std::thread([this] {
      try {
        SetModel(LoadCheckpoint(config_.checkpoint, catalog_));
      } catch (const std::exception& e) {
        std::cerr << "siteplan: cannot load checkpoint: " << e.what() << '\n';
      }
    });
  }
  return http.listen_after_bind();
}

void Service::Stop() {
  if (server_) server_->http.stop();
}

}  // namespace siteplan
