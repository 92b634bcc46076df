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

// Procedural residential layouts with planted placement rules.
//
// Architectural units sit in rows along the lower and upper site edges, each
// backed by its own hedge segment and mirrored about the vertical center
// line. A pool either occupies the open middle band or takes over one row
// slot, leaving that slot's hedge without a building. Fence runs line the
// border. One architectural unit with an intact mirror partner is removed
// as the held-out placement.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "siteplan/rng.hpp"
#include "siteplan/scene.hpp"

namespace siteplan {

struct GeneratorConfig {
  int grid_w = 64;
  int grid_h = 64;
  bool row_placement = true;
  bool symmetry = true;
  bool pool = true;
  int pool_margin = 1;
  bool fence_runs = true;
  int min_units = 20;
  int max_units = 60;
  int max_attempts = 64;

  static GeneratorConfig FullScale();
  void Validate() const;
};

nlohmann::json GeneratorConfigToJson(const GeneratorConfig& config);
GeneratorConfig GeneratorConfigFromJson(const nlohmann::json& doc);

enum class RowEdge { kBottom, kTop };

struct HeldOutPlacement {
  int unit_id = 0;
  int category_id = 0;
  OBB obb;
  Orientation orientation = Orientation::k0;
  std::optional<int> mirror_partner_id;
  std::optional<RowEdge> row_edge;  // which box edge lies on the row line
  int row_line = 0;

  Unit AsUnit() const { return Unit{unit_id, category_id, obb, orientation}; }
};

struct GeneratedScene {
  Scene scene;  // without the held-out unit
  HeldOutPlacement held_out;
  bool pool_in_row = false;

  Scene FullScene() const;
};

// Deterministic in (config, seed). Throws kInvalidArgument when no layout
// within the unit-count range is found after config.max_attempts tries.
GeneratedScene GenerateScene(const GeneratorConfig& config, const Catalog& catalog,
                             std::uint64_t seed);

nlohmann::json RulesSidecar(const GeneratedScene& generated,
                            const GeneratorConfig& config);
HeldOutPlacement HeldOutFromSidecar(const nlohmann::json& doc);

struct DatasetEntry {
  std::string scene_file;  // relative to the dataset root
  std::string rules_file;
  std::uint64_t seed = 0;
  bool train = true;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::string catalog_hash;
  std::uint64_t seed = 0;
  std::vector<DatasetEntry> entries;
  std::string hash;  // hash of the manifest document text

  std::vector<const DatasetEntry*> Split(bool train) const;
};

inline constexpr double kDefaultTrainFraction = 0.8;

// Writes scenes/NNNNN.scene, rules/NNNNN.rules.json and manifest.json.
// Throws kInvalidArgument for n < 1 and kIo naming the failing path.
DatasetManifest GenerateDataset(const GeneratorConfig& config, const Catalog& catalog,
                                int n, std::uint64_t seed,
                                const std::filesystem::path& out_dir);

DatasetManifest ReadManifest(const std::filesystem::path& dataset_dir);

// Scene file plus its held-out unit put back.
Scene LoadFullScene(const DatasetManifest& manifest, const DatasetEntry& entry);


}  // namespace siteplan
