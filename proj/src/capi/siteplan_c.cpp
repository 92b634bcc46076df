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

#include "siteplan/siteplan.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <set>
#include <string>

#include "json.hpp"
#include "siteplan/checkpoint.hpp"
#include "siteplan/error.hpp"
#include "siteplan/graph.hpp"
#include "siteplan/image_io.hpp"
#include "siteplan/render.hpp"
#include "siteplan/scene_io.hpp"
#include "siteplan/service.hpp"
#include "siteplan/synth.hpp"
#include "siteplan/training.hpp"

struct sp_catalog {
  siteplan::Catalog catalog;
};

struct sp_model {
  siteplan::Catalog catalog;
  siteplan::Checkpoint checkpoint;
};

struct sp_service {
  std::unique_ptr<siteplan::Service> service;
};

namespace {

using nlohmann::json;
using siteplan::ErrorCode;
using siteplan::Fail;

static_assert(SP_INVALID_ARGUMENT == static_cast<int>(ErrorCode::kInvalidArgument));
static_assert(SP_IO == static_cast<int>(ErrorCode::kIo));
static_assert(SP_PARSE == static_cast<int>(ErrorCode::kParse));
static_assert(SP_INVALID_SCENE == static_cast<int>(ErrorCode::kInvalidScene));
static_assert(SP_TOO_LARGE == static_cast<int>(ErrorCode::kTooLarge));
static_assert(SP_CATALOG_MISMATCH == static_cast<int>(ErrorCode::kCatalogMismatch));
static_assert(SP_DIVERGED == static_cast<int>(ErrorCode::kDiverged));
static_assert(SP_UNAVAILABLE == static_cast<int>(ErrorCode::kUnavailable));
static_assert(SP_INTERNAL == static_cast<int>(ErrorCode::kInternal));

thread_local std::string last_error;

// Runs fn, mapping exceptions to a status and the thread's error message.
template <typename Fn>
sp_status Guard(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return SP_OK;
  } catch (const siteplan::Error& e) {
    last_error = e.what();
    return static_cast<sp_status>(e.code());
  } catch (const json::exception& e) {
    last_error = e.what();
    return SP_PARSE;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return SP_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return SP_INTERNAL;
  }
}

void Require(const void* p, const char* what) {
  if (p == nullptr) Fail(ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

char* Copy(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

void Emit(char** out, const json& doc) {
  if (out != nullptr) *out = Copy(doc.dump());
}

json ParseOr(const char* text, json fallback) {
  if (text == nullptr || *text == '\0') return fallback;
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("malformed JSON: ") + e.what());
  }
}

siteplan::Scene ParseScene(const char* scene_json) {
  Require(scene_json, "scene");
  return siteplan::SceneFromString(scene_json);
}

bool EndsWith(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

extern "C" {

const char* sp_version(void) { return SITEPLAN_VERSION; }

const char* sp_status_name(sp_status status) {
  switch (status) {
    case SP_OK: return "ok";
    case SP_INVALID_ARGUMENT: return "invalid_argument";
    case SP_IO: return "io";
    case SP_PARSE: return "parse";
    case SP_INVALID_SCENE: return "invalid_scene";
    case SP_TOO_LARGE: return "too_large";
    case SP_CATALOG_MISMATCH: return "catalog_mismatch";
    case SP_DIVERGED: return "diverged";
    case SP_UNAVAILABLE: return "unavailable";
    case SP_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* sp_last_error(void) { return last_error.c_str(); }

void sp_free(char* text) { std::free(text); }

sp_status sp_catalog_default(sp_catalog** out) {
  return Guard([&] {
    Require(out, "out");
    *out = new sp_catalog{siteplan::Catalog::DeskDefault()};
  });
}

sp_status sp_catalog_from_json(const char* text, sp_catalog** out) {
  return Guard([&] {
    Require(text, "catalog");
    Require(out, "out");
    *out = new sp_catalog{siteplan::CatalogFromJson(ParseOr(text, json()))};
  });
}

sp_status sp_catalog_to_json(const sp_catalog* catalog, char** out) {
  return Guard([&] {
    Require(catalog, "catalog");
    Emit(out, siteplan::CatalogToJson(catalog->catalog));
  });
}

void sp_catalog_free(sp_catalog* catalog) { delete catalog; }

sp_status sp_validate_scene(const sp_catalog* catalog, const char* scene_json,
                            char** violations_json) {
  return Guard([&] {
    Require(catalog, "catalog");
    const auto scene = ParseScene(scene_json);
    Emit(violations_json,
         siteplan::ViolationsToJson(siteplan::ValidateScene(scene, &catalog->catalog)));
  });
}

sp_status sp_extract_graph(const sp_catalog* catalog, const char* scene_json, char** graph_json) {
  return Guard([&] {
    Require(catalog, "catalog");
    const auto scene = ParseScene(scene_json);
    const auto violations = siteplan::ValidateScene(scene, &catalog->catalog);
    if (!violations.empty()) {
      Fail(ErrorCode::kInvalidScene, siteplan::ViolationsToJson(violations).dump());
    }
    Emit(graph_json, siteplan::GraphToJson(siteplan::BuildGraph(scene, catalog->catalog)));
  });
}

sp_status sp_render(const sp_catalog* catalog, const char* scene_json, int resolution,
                    const char* out_path) {
  return Guard([&] {
    Require(catalog, "catalog");
    Require(out_path, "output path");
    const auto scene = ParseScene(scene_json);
    const auto image = siteplan::RenderTopdown(scene, catalog->catalog, resolution);
    if (EndsWith(out_path, ".pgm")) {
      siteplan::WritePgm(image.depth, image.resolution, image.resolution, out_path);
    } else {
      siteplan::WriteFloatGrid(image.ToFloatGrid(), out_path);
    }
  });
}

sp_status sp_generate_dataset(const sp_catalog* catalog, const char* config_json, int n,
                              uint64_t seed, const char* out_dir, char** summary_json) {
  return Guard([&] {
    Require(catalog, "catalog");
    Require(out_dir, "output directory");
    const json doc = ParseOr(config_json, json());
    const auto config =
        doc.is_null() ? siteplan::GeneratorConfig{} : siteplan::GeneratorConfigFromJson(doc);
    const auto manifest = siteplan::GenerateDataset(config, catalog->catalog, n, seed, out_dir);
    Emit(summary_json, {{"scenes", manifest.entries.size()},
                        {"train", manifest.Split(true).size()},
                        {"test", manifest.Split(false).size()},
                        {"manifest_hash", manifest.hash}});
  });
}

sp_status sp_train(const sp_catalog* catalog, const char* dataset_dir, const char* config_json,
                   const char* checkpoint_path, const char* log_path, char** summary_json) {
  return Guard([&] {
    Require(catalog, "catalog");
    Require(dataset_dir, "dataset directory");
    Require(checkpoint_path, "checkpoint path");
    const json doc = ParseOr(config_json, json::object());
    const auto train_config = siteplan::TrainConfig::FromJson(doc.value("train", json::object()));
    const auto model_config = siteplan::ApplyVariant(
        siteplan::ModelConfig::FromJson(doc.value("model", json::object())), train_config.variant);
    model_config.Validate();
    train_config.Validate();

    const auto manifest = siteplan::ReadManifest(dataset_dir);
    siteplan::SampleReport report;
    auto all = siteplan::LoadSplit(manifest, catalog->catalog, true, model_config.image_resolution,
                                   &report);
    if (all.empty()) Fail(ErrorCode::kInvalidArgument, "dataset has no training samples");

    // Every tenth training scene validates when early stopping is on.
    std::vector<siteplan::TrainSample> train, val;
    std::set<std::string> seen;
    for (auto& s : all) {
      seen.insert(s.source);
      const bool hold = train_config.patience > 0 && report.scenes >= 10 && seen.size() % 10 == 0;
      (hold ? val : train).push_back(std::move(s));
    }

    std::ofstream log;
    if (log_path != nullptr) {
      log.open(log_path);
      if (!log) Fail(ErrorCode::kIo, std::string("cannot write ") + log_path);
    }
    siteplan::RelationModel model(model_config);
    const auto result =
        siteplan::Train(model, train, val, train_config, log_path != nullptr ? &log : nullptr);
    const json summary = {{"train_samples", train.size()},
                          {"val_samples", val.size()},
                          {"epochs_run", result.history.size()},
                          {"best_epoch", result.best_epoch},
                          {"early_stopped", result.early_stopped},
                          {"initial_train_nll", result.initial_train_nll},
                          {"final_train_nll", result.final_train_nll}};
    siteplan::SaveCheckpoint(model, catalog->catalog,
                             {{"dataset", manifest.hash},
                              {"train", train_config.ToJson()},
                              {"result", summary}},
                             checkpoint_path);
    Emit(summary_json, summary);
  });
}

sp_status sp_model_load(const sp_catalog* catalog, const char* checkpoint_path, sp_model** out) {
  return Guard([&] {
    Require(catalog, "catalog");
    Require(checkpoint_path, "checkpoint path");
    Require(out, "out");
    auto ck = siteplan::LoadCheckpoint(checkpoint_path, catalog->catalog);
    *out = new sp_model{catalog->catalog, std::move(ck)};
  });
}

sp_status sp_model_info(const sp_model* model, char** info_json) {
  return Guard([&] {
    Require(model, "model");
    Emit(info_json, {{"checkpoint_id", model->checkpoint.id},
                     {"catalog_hash", model->checkpoint.catalog_hash},
                     {"config", model->checkpoint.model->config().ToJson()},
                     {"metadata", model->checkpoint.metadata}});
  });
}

void sp_model_free(sp_model* model) { delete model; }

sp_status sp_evaluate(const sp_model* model, const char* dataset_dir, const char* options_json,
                      char** report_json) {
  return Guard([&] {
    Require(model, "model");
    Require(dataset_dir, "dataset directory");
    const auto opts = siteplan::RecommendOptions::FromJson(ParseOr(options_json, json()));
    const auto& net = *model->checkpoint.model;
    const auto manifest = siteplan::ReadManifest(dataset_dir);
    const auto samples =
        siteplan::LoadSplit(manifest, model->catalog, false, net.config().image_resolution);
    siteplan::EvalOptions eval;
    eval.mode = opts.mode;
    eval.seed = opts.seed;
    eval.target_size = opts.target_size;
    json doc = siteplan::Evaluate(net, samples, eval).ToJson();
    doc["checkpoint_id"] = model->checkpoint.id;
    Emit(report_json, doc);
  });
}

sp_status sp_recommend(const sp_model* model, const char* scene_json, const char* options_json,
                       char** response_json) {
  return Guard([&] {
    Require(model, "model");
    const auto scene = ParseScene(scene_json);
    const auto opts = siteplan::RecommendOptions::FromJson(ParseOr(options_json, json()));
    const auto rec = siteplan::Recommend(*model->checkpoint.model, model->catalog, scene, opts);
    Emit(response_json, siteplan::RecommendationToJson(rec, model->checkpoint.id, 0.0));
  });
}

sp_status sp_service_create(const sp_catalog* catalog, const char* config_json,
                            const char* overrides_json, sp_service** out) {
  return Guard([&] {
    Require(catalog, "catalog");
    Require(out, "out");
    auto config = siteplan::ServiceConfig::FromJson(ParseOr(config_json, json::object()));
    config.ApplyEnvironment();
    json merged = siteplan::ServiceConfig::ToJson(config);
    merged.update(ParseOr(overrides_json, json::object()));
    config = siteplan::ServiceConfig::FromJson(merged);
    *out = new sp_service{std::make_unique<siteplan::Service>(catalog->catalog, config)};
  });
}

sp_status sp_service_run(sp_service* service) {
  return Guard([&] {
    Require(service, "service");
    if (!service->service->Run()) Fail(ErrorCode::kIo, "cannot bind the service address");
  });
}

void sp_service_stop(sp_service* service) {
  if (service != nullptr) service->service->Stop();
}

int sp_service_port(const sp_service* service) {
  return service != nullptr ? service->service->bound_port() : 0;
}

void sp_service_free(sp_service* service) { delete service; }

}  // extern "C"
