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

#include <chrono>
#include <filesystem>
#include <thread>

#include "doctest.h"
#include "support/model_check.hpp"
#include "siteplan/checkpoint.hpp"
#include "siteplan/heatmap.hpp"
#include "siteplan/scene_io.hpp"
#include "siteplan/service.hpp"

// After Eigen: the resolver header defines a macro named _res.
#include "httplib.h"

using namespace siteplan;

namespace {

std::filesystem::path FixtureCheckpoint(const Catalog& cat) {
  const auto dir = std::filesystem::temp_directory_path() / "siteplan_service_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "tiny.ckpt";
  if (!std::filesystem::exists(path)) {
    RelationModel model(modelcheck::TinyConfig());
    SaveCheckpoint(model, cat, {}, path);
  }
  return path;
}

Scene ToyScene(const Catalog& cat) {
  Unit held;
  return modelcheck::FiveNodeScene(cat, &held);
}

nlohmann::json RecommendBody(const Scene& scene) {
  return {{"scene", SceneToJson(scene)}, {"options", {{"mode", "argmax"}}}};
}

}  // namespace

TEST_CASE("health reports loading until a model is installed") {
  const Catalog cat = Catalog::DeskDefault();
  Service service(cat, ServiceConfig{});
  CHECK(service.Handle("GET", "/v1/health", "").status == 503);
  CHECK(service.Handle("POST", "/v1/recommend", RecommendBody(ToyScene(cat)).dump()).status == 503);
  service.SetModel(LoadCheckpoint(FixtureCheckpoint(cat), cat));
  const auto h = service.Handle("GET", "/v1/health", "");
  CHECK(h.status == 200);
  CHECK(h.body.at("status") == "ok");
  CHECK(h.body.at("checkpoint_id").get<std::string>().size() == 16);
}

TEST_CASE("catalog, validate and extract") {
  const Catalog cat = Catalog::DeskDefault();
  Service service(cat, ServiceConfig{});
  const auto c = service.Handle("GET", "/v1/catalog", "");
  CHECK(c.status == 200);
  CHECK(CatalogFromJson(c.body).Hash() == cat.Hash());

  Scene scene = ToyScene(cat);
  auto v = service.Handle("POST", "/v1/validate", SceneToJson(scene).dump());
  CHECK(v.status == 200);
  CHECK(v.body.at("valid") == true);

  const auto g = service.Handle("POST", "/v1/extract", SceneToJson(scene).dump());
  CHECK(g.status == 200);
  CHECK(g.body == GraphToJson(BuildGraph(scene, cat)));

  scene.units.push_back({7, scene.units[0].category_id, scene.units[0].obb, Orientation::k0});
  v = service.Handle("POST", "/v1/validate", SceneToJson(scene).dump());
  CHECK(v.body.at("valid") == false);
  CHECK(v.body.at("violations").size() == 1);
  CHECK(service.Handle("POST", "/v1/extract", SceneToJson(scene).dump()).status == 422);
}

TEST_CASE("error statuses") {
  const Catalog cat = Catalog::DeskDefault();
  Service service(cat, ServiceConfig{});
  service.SetModel(LoadCheckpoint(FixtureCheckpoint(cat), cat));
  CHECK(service.Handle("POST", "/v1/recommend", "{not json").status == 400);
  CHECK(service.Handle("POST", "/v1/recommend", "{}").status == 400);
  CHECK(service.Handle("GET", "/v1/nowhere", "").status == 404);
  CHECK(service.Handle("GET", "/v1/recommend", "").status == 405);

  SUBCASE("overlapping units") {
    Scene scene = ToyScene(cat);
    scene.units.push_back({7, scene.units[0].category_id, scene.units[0].obb, Orientation::k0});
    const auto r = service.Handle("POST", "/v1/recommend", RecommendBody(scene).dump());
    CHECK(r.status == 422);
    CHECK(r.body.at("violations").size() == 1);
  }
  SUBCASE("empty scene") {
    const auto r = service.Handle("POST", "/v1/recommend",
                                  RecommendBody(Scene::Empty(32, 32, cat)).dump());
    CHECK(r.status == 422);
  }
  SUBCASE("too many nodes") {
    Scene scene = Scene::Empty(32, 32, cat);
    const int house = cat.CategoriesOfKind(UnitKind::kArchitectural).front();
    for (int k = 0; k < 20; ++k) {
      scene.units.push_back({k, house, {(k % 5) * 6, (k / 5) * 6, 2, 2}, Orientation::k0});
    }
    CHECK(service.Handle("POST", "/v1/recommend", RecommendBody(scene).dump()).status == 413);
  }
  SUBCASE("bad options") {
    auto body = RecommendBody(ToyScene(cat));
    body["options"]["mode"] = "greedy";
    CHECK(service.Handle("POST", "/v1/recommend", body.dump()).status == 422);
  }
}

TEST_CASE("recommend matches the library call") {
  const Catalog cat = Catalog::DeskDefault();
  const auto path = FixtureCheckpoint(cat);
  Service service(cat, ServiceConfig{});
  service.SetModel(LoadCheckpoint(path, cat));
  const Checkpoint direct = LoadCheckpoint(path, cat);
  const Scene scene = ToyScene(cat);

  const auto r = service.Handle("POST", "/v1/recommend", RecommendBody(scene).dump());
  REQUIRE(r.status == 200);
  const Recommendation rec = Recommend(*direct.model, cat, scene, RecommendOptions{});
  CHECK(r.body.at("heatmap") == HeatmapToJson(rec.heatmap.map));
  CHECK(r.body.at("display_heatmap") == HeatmapToJson(rec.display));
  CHECK(r.body.at("checkpoint_id") == direct.id);
  CHECK(r.body.at("heatmap").at("width") == scene.grid_w);

  // The payload decodes to the same map and the peak is its argmax.
  const auto& hm = r.body.at("heatmap");
  const Heatmap back = DecodeHeatmapPayload(hm.at("data").get<std::string>(), hm.at("width"),
                                            hm.at("height"));
  REQUIRE(back.values.size() == rec.heatmap.map.values.size());
  for (size_t k = 0; k < back.values.size(); ++k) {
    CHECK(back.values[k] == static_cast<float>(rec.heatmap.map.values[k]));
  }
  CHECK(r.body.at("peak").at("x") == rec.peak.first);
  CHECK(r.body.at("peak").at("y") == rec.peak.second);

  const auto again = service.Handle("POST", "/v1/recommend", RecommendBody(scene).dump());
  CHECK(again.body.at("heatmap") == r.body.at("heatmap"));
}

TEST_CASE("serves over a socket and loads the checkpoint in the background") {
  const Catalog cat = Catalog::DeskDefault();
  ServiceConfig config;
  config.port = 0;
  config.checkpoint = FixtureCheckpoint(cat).string();
  Service service(cat, config);
  std::thread server([&] { service.Run(); });
  for (int k = 0; k < 200 && service.bound_port() == 0; ++k) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  REQUIRE(service.bound_port() > 0);
  for (int k = 0; k < 500 && !service.ready(); ++k) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  REQUIRE(service.ready());

  httplib::Client client("127.0.0.1", service.bound_port());
  const auto health = client.Get("/v1/health");
  REQUIRE(health);
  CHECK(health->status == 200);

  const Scene scene = ToyScene(cat);
  const auto res = client.Post("/v1/recommend", RecommendBody(scene).dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  const auto body = nlohmann::json::parse(res->body);
  const auto local = service.Handle("POST", "/v1/recommend", RecommendBody(scene).dump());
  CHECK(body.at("heatmap") == local.body.at("heatmap"));

  const auto bad = client.Post("/v1/recommend", "[", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  service.Stop();
  server.join();
}
