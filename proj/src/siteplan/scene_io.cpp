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

#include "siteplan/scene_io.hpp"

#include <fstream>
#include <sstream>

#include "siteplan/error.hpp"

namespace siteplan {

using nlohmann::json;

std::vector<int> EncodeMaskRow(const ForbiddenMask& mask, int y) {
  std::vector<int> runs;
  bool current = false;
  int run = 0;
  for (int x = 0; x < mask.width(); ++x) {
    const bool cell = mask.at(x, y);
    if (cell != current) {
      runs.push_back(run);
      run = 0;
      current = cell;
    }
    ++run;
  }
  runs.push_back(run);
  return runs;
}

json SceneToJson(const Scene& scene) {
  json units = json::array();
  for (const auto& u : scene.units) {
    units.push_back({{"id", u.unit_id},
                     {"category", u.category_id},
                     {"x", u.obb.x},
                     {"y", u.obb.y},
                     {"w", u.obb.w},
                     {"h", u.obb.h},
                     {"orientation", Degrees(u.orientation)}});
  }
  json rows = json::array();
  for (int y = 0; y < scene.forbidden.height(); ++y) {
    rows.push_back(EncodeMaskRow(scene.forbidden, y));
  }
  return {{"format", kSceneFormat},
          {"version", kSceneFormatVersion},
          {"grid", {{"width", scene.grid_w}, {"height", scene.grid_h}}},
          {"catalog", {{"name", scene.catalog_name}, {"hash", scene.catalog_hash}}},
          {"units", std::move(units)},
          {"forbidden_rle", std::move(rows)}};
}

namespace {

template <typename T>
T Field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    Fail(ErrorCode::kParse, std::string("missing field '") + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace

Scene SceneFromJson(const json& doc) {
  if (Field<std::string>(doc, "format") != kSceneFormat) {
    Fail(ErrorCode::kParse, "not a scene document");
  }
  if (Field<int>(doc, "version") != kSceneFormatVersion) {
    Fail(ErrorCode::kParse, "unsupported scene version");
  }
  Scene scene;
  const json& grid = doc.at("grid");
  scene.grid_w = Field<int>(grid, "width");
  scene.grid_h = Field<int>(grid, "height");
  if (scene.grid_w <= 0 || scene.grid_h <= 0 || scene.grid_w > 4096 ||
      scene.grid_h > 4096) {
    Fail(ErrorCode::kParse, "grid dims out of range");
  }
  if (doc.contains("catalog")) {
    scene.catalog_name = Field<std::string>(doc.at("catalog"), "name");
    scene.catalog_hash = Field<std::string>(doc.at("catalog"), "hash");
  }
  for (const auto& u : Field<json>(doc, "units")) {
    Unit unit;
    unit.unit_id = Field<int>(u, "id");
    unit.category_id = Field<int>(u, "category");
    unit.obb = OBB{Field<int>(u, "x"), Field<int>(u, "y"), Field<int>(u, "w"),
                   Field<int>(u, "h")};
    unit.orientation = OrientationFromDegrees(
        u.contains("orientation") ? Field<int>(u, "orientation") : 0);
    scene.units.push_back(unit);
  }
  scene.forbidden = ForbiddenMask(scene.grid_w, scene.grid_h);
  if (doc.contains("forbidden_rle")) {
    const json& rows = doc.at("forbidden_rle");
    if (!rows.is_array() || static_cast<int>(rows.size()) != scene.grid_h) {
      Fail(ErrorCode::kParse, "forbidden_rle must have one entry per grid row");
    }
    for (int y = 0; y < scene.grid_h; ++y) {
      int x = 0;
      bool value = false;
      for (const auto& run_json : rows[static_cast<size_t>(y)]) {
        const int run = run_json.get<int>();
        if (run < 0 || x + run > scene.grid_w) {
          Fail(ErrorCode::kParse, "forbidden_rle row " + std::to_string(y) +
                                      " overruns the grid width");
        }
        for (int k = 0; k < run; ++k) scene.forbidden.set(x + k, y, value);
        x += run;
        value = !value;
      }
      if (x != scene.grid_w) {
        Fail(ErrorCode::kParse, "forbidden_rle row " + std::to_string(y) +
                                    " does not cover the grid width");
      }
    }
  }
  return scene;
}

std::string SceneToString(const Scene& scene) { return SceneToJson(scene).dump(1); }

Scene SceneFromString(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    Fail(ErrorCode::kParse, std::string("scene is not valid JSON: ") + e.what());
  }
  return SceneFromJson(doc);
}

void WriteScene(const Scene& scene, const std::filesystem::path& path) {
  WriteTextFile(path, SceneToString(scene) + "\n");
}

Scene ReadScene(const std::filesystem::path& path) {
  try {
    return SceneFromString(ReadTextFile(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

json CatalogToJson(const Catalog& catalog) {
  json entries = json::array();
  for (const auto& e : catalog.entries()) {
    entries.push_back({{"category_id", e.category_id},
                       {"name", e.name},
                       {"kind", UnitKindName(e.kind)},
                       {"nominal_height", e.nominal_height},
                       {"default_footprint", {e.default_w, e.default_h}}});
  }
  return {{"name", catalog.name()}, {"hash", catalog.Hash()}, {"entries", entries}};
}

Catalog CatalogFromJson(const json& doc) {
  std::vector<UnitCatalogEntry> entries;
  for (const auto& e : Field<json>(doc, "entries")) {
    UnitCatalogEntry entry;
    entry.category_id = Field<int>(e, "category_id");
    entry.name = Field<std::string>(e, "name");
    entry.kind = ParseUnitKind(Field<std::string>(e, "kind"));
    entry.nominal_height = Field<double>(e, "nominal_height");
    const auto fp = Field<std::vector<int>>(e, "default_footprint");
    if (fp.size() != 2) Fail(ErrorCode::kParse, "default_footprint must be [w, h]");
    entry.default_w = fp[0];
    entry.default_h = fp[1];
    entries.push_back(entry);
  }
  return Catalog(Field<std::string>(doc, "name"), std::move(entries));
}

json ViolationsToJson(const std::vector<Violation>& violations) {
  json out = json::array();
  for (const auto& v : violations) {
    json cells = json::array();
    for (const auto& [x, y] : v.cells) cells.push_back({x, y});
    out.push_back({{"kind", ViolationKindName(v.kind)},
                   {"unit_ids", v.unit_ids},
                   {"cells", cells},
                   {"message", v.message}});
  }
  return out;
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) Fail(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace siteplan
