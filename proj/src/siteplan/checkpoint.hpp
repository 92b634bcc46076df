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

// Model checkpoints: "SPCKPT01", a little-endian u64 header length, a JSON
// header (format version, model config, catalog hash, tensor shapes, clue
// statistics, free-form metadata) and the float64 tensor data in header order.

#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "json.hpp"
#include "siteplan/relnet.hpp"
#include "siteplan/scene.hpp"

namespace siteplan {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  std::unique_ptr<RelationModel> model;
  std::string catalog_hash;
  std::string id;  // hash of the tensor data
  nlohmann::json metadata;
};

void SaveCheckpoint(const RelationModel& model, const Catalog& catalog,
                    const nlohmann::json& metadata, const std::filesystem::path& path);

// Throws kIo for unreadable files, kParse for malformed ones and
// kCatalogMismatch when the stored catalog hash differs from catalog's.
Checkpoint LoadCheckpoint(const std::filesystem::path& path, const Catalog& catalog);

}  // namespace siteplan
