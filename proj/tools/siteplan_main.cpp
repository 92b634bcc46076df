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

// siteplan command line. Talks to the library through the C interface only.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "siteplan/siteplan.h"

namespace {

using nlohmann::json;

constexpr int kBadInput = 1;
constexpr int kUsage = 2;

// Failure carrying the process exit code; message is printed as is.
struct Abort {
  int code;
  std::string message;
};

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Abort{kBadInput, path + ": cannot read"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json ReadJsonFile(const std::string& path) {
  try {
    return json::parse(ReadFile(path));
  } catch (const json::exception& e) {
    throw Abort{kBadInput, path + ": " + e.what()};
  }
}

// Throws with context when a C call fails.
void Check(sp_status status, const std::string& context) {
  if (status == SP_OK) return;
  std::string msg = context.empty() ? "" : context + ": ";
  msg += sp_last_error();
  msg += " (";
  msg += sp_status_name(status);
  msg += ")";
  throw Abort{kBadInput, msg};
}

// Owns a string returned by the library.
class Text {
 public:
  Text() = default;
  Text(const Text&) = delete;
  Text& operator=(const Text&) = delete;
  ~Text() { sp_free(ptr_); }
  char** out() { return &ptr_; }
  std::string str() const { return ptr_ ? ptr_ : ""; }

 private:
  char* ptr_ = nullptr;
};

void WriteOutput(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Abort{kBadInput, path + ": cannot write"};
  out << text << '\n';
  if (!out) throw Abort{kBadInput, path + ": write failed"};
}

struct CatalogHandle {
  sp_catalog* ptr = nullptr;
  ~CatalogHandle() { sp_catalog_free(ptr); }
};

void LoadCatalog(const std::string& path, CatalogHandle* out) {
  if (path.empty()) {
    Check(sp_catalog_default(&out->ptr), "");
  } else {
    Check(sp_catalog_from_json(ReadFile(path).c_str(), &out->ptr), path);
  }
}

struct ModelHandle {
  sp_model* ptr = nullptr;
  ~ModelHandle() { sp_model_free(ptr); }
};

sp_service* g_service = nullptr;

void StopOnSignal(int) {
  if (g_service != nullptr) sp_service_stop(g_service);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Placement recommendation for site layouts"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sp_version()));
  std::string catalog_path;
  app.add_option("--catalog", catalog_path, "Unit catalog JSON (default: built-in desk catalog)");

  std::string out, config_path, checkpoint, data_dir, scene_path, variant, mode = "argmax",
      log_path;
  std::optional<std::uint64_t> seed;
  int count = 100;
  int resolution = 128;
  std::optional<int> epochs;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("-n,--count", count, "Number of scenes")->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "Dataset seed");
  gen->add_option("--config", config_path, "Generator config JSON");

  auto* extract = app.add_subcommand("extract-graph", "Extract the relation graph of a scene");
  extract->add_option("scene", scene_path, "Scene file")->required();
  extract->add_option("--out", out, "Output file (default: stdout)");

  auto* render = app.add_subcommand("render", "Render the top-down image of a scene");
  render->add_option("scene", scene_path, "Scene file")->required();
  render->add_option("--out", out, "Output .fgrid or .pgm")->required();
  render->add_option("--resolution", resolution, "Image size in pixels")->check(CLI::Range(32, 4096));

  auto* train = app.add_subcommand("train", "Train a model on a dataset");
  train->add_option("--data", data_dir, "Dataset directory")->required();
  train->add_option("--out", out, "Checkpoint path")->required();
  train->add_option("--config", config_path, "Training config JSON with model and train objects");
  train->add_option("--seed", seed, "Training seed");
  train->add_option("--variant", variant, "full, no_matching_loss or graph_only")
      ->check(CLI::IsMember({"full", "no_matching_loss", "graph_only"}));
  train->add_option("--epochs", epochs, "Epoch count")->check(CLI::NonNegativeNumber);
  train->add_option("--log", log_path, "Per-epoch JSONL log");

  auto* eval = app.add_subcommand("eval", "Score a checkpoint on the test split");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint path")->required();
  eval->add_option("--data", data_dir, "Dataset directory")->required();
  eval->add_option("--out", out, "Report file (default: stdout)");
  eval->add_option("--mode", mode, "Edge decoding")->check(CLI::IsMember({"argmax", "sample"}));
  eval->add_option("--seed", seed, "Sampling seed");

  auto* rec = app.add_subcommand("recommend", "Recommend a location for a new unit");
  rec->add_option("scene", scene_path, "Scene file")->required();
  rec->add_option("--checkpoint", checkpoint, "Checkpoint path")->required();
  rec->add_option("--out", out, "Response file (default: stdout)");
  rec->add_option("--mode", mode, "Edge decoding")->check(CLI::IsMember({"argmax", "sample"}));
  rec->add_option("--seed", seed, "Sampling seed");

  auto* serve = app.add_subcommand("serve", "Serve the HTTP interface");
  serve->add_option("--config", config_path, "Service config JSON");
  serve->add_option("--checkpoint", checkpoint, "Checkpoint path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    CatalogHandle catalog;
    LoadCatalog(catalog_path, &catalog);
    auto options_doc = [&] {
      json o = {{"mode", mode}};
      if (seed) o["seed"] = *seed;
      return o.dump();
    };

    if (*gen) {
      const std::string cfg = config_path.empty() ? "" : ReadJsonFile(config_path).dump();
      Text summary;
      Check(sp_generate_dataset(catalog.ptr, cfg.empty() ? nullptr : cfg.c_str(), count,
                                seed.value_or(0), out.c_str(), summary.out()),
            out);
      std::cout << summary.str() << '\n';
    } else if (*extract) {
      Text graph;
      Check(sp_extract_graph(catalog.ptr, ReadFile(scene_path).c_str(), graph.out()), scene_path);
      WriteOutput(graph.str(), out);
    } else if (*render) {
      Check(sp_render(catalog.ptr, ReadFile(scene_path).c_str(), resolution, out.c_str()),
            scene_path);
    } else if (*train) {
      json cfg = config_path.empty() ? json::object() : ReadJsonFile(config_path);
      if (!cfg.is_object()) throw Abort{kBadInput, config_path + ": expected a JSON object"};
      if (seed) cfg["train"]["seed"] = *seed;
      if (!variant.empty()) cfg["train"]["variant"] = variant;
      if (epochs) cfg["train"]["epochs"] = *epochs;
      Text summary;
      Check(sp_train(catalog.ptr, data_dir.c_str(), cfg.dump().c_str(), out.c_str(),
                     log_path.empty() ? nullptr : log_path.c_str(), summary.out()),
            data_dir);
      std::cout << summary.str() << '\n';
    } else if (*eval) {
      ModelHandle model;
      Check(sp_model_load(catalog.ptr, checkpoint.c_str(), &model.ptr), checkpoint);
      Text report;
      Check(sp_evaluate(model.ptr, data_dir.c_str(), options_doc().c_str(), report.out()),
            data_dir);
      WriteOutput(report.str(), out);
    } else if (*rec) {
      ModelHandle model;
      Check(sp_model_load(catalog.ptr, checkpoint.c_str(), &model.ptr), checkpoint);
      Text response;
      Check(sp_recommend(model.ptr, ReadFile(scene_path).c_str(), options_doc().c_str(),
                         response.out()),
            scene_path);
      WriteOutput(response.str(), out);
    } else if (*serve) {
      const std::string cfg = config_path.empty() ? "" : ReadJsonFile(config_path).dump();
      json overrides = json::object();
      if (!checkpoint.empty()) overrides["checkpoint"] = checkpoint;
      sp_service* service = nullptr;
      Check(sp_service_create(catalog.ptr, cfg.empty() ? nullptr : cfg.c_str(),
                              overrides.dump().c_str(), &service),
            config_path);
      g_service = service;
      std::signal(SIGINT, StopOnSignal);
      std::signal(SIGTERM, StopOnSignal);
      const sp_status status = sp_service_run(service);
      g_service = nullptr;
      sp_service_free(service);
      Check(status, "serve");
    }
  } catch (const Abort& e) {
    std::cerr << "siteplan: " << e.message << '\n';
    return e.code;
  }
  return 0;
}
