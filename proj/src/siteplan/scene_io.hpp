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

// Scene and catalog documents. Field names are fixed by docs/scene_format.md.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "siteplan/scene.hpp"

namespace siteplan {

inline constexpr const char* kSceneFormat = "siteplan.scene";
inline constexpr int kSceneFormatVersion = 1;

// Alternating run lengths per row, starting with a (possibly empty) run of
// free cells.
std::vector<int> EncodeMaskRow(const ForbiddenMask& mask, int y);

nlohmann::json SceneToJson(const Scene& scene);
Scene SceneFromJson(const nlohmann::json& doc);

std::string SceneToString(const Scene& scene);
Scene SceneFromString(const std::string& text);

void WriteScene(const Scene& scene, const std::filesystem::path& path);
Scene ReadScene(const std::filesystem::path& path);

nlohmann::json CatalogToJson(const Catalog& catalog);
Catalog CatalogFromJson(const nlohmann::json& doc);

nlohmann::json ViolationsToJson(const std::vector<Violation>& violations);

// Small file helpers shared by the other document formats.
std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, const std::string& text);

}  // namespace siteplan
