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

#include "siteplan/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "siteplan/error.hpp"
#include "siteplan/hash.hpp"
#include "siteplan/scene_io.hpp"

namespace siteplan {

using nlohmann::json;

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

struct Slot {
  int category;
  OBB house;
  OBB hedge;
  Orientation orientation;
  int row;
  int pair;
  bool right_side;
  int house_id = -1;
  int hedge_id = -1;
};

class Builder {
 public:
  Builder(const GeneratorConfig& config, const Catalog& catalog, std::uint64_t seed)
      : config_(config), catalog_(catalog), rng_(seed),
        scale_(config.grid_w / 64.0) {
    scene_ = Scene::Empty(config.grid_w, config.grid_h, catalog);
  }

  int S(double v) const { return std::max(1, static_cast<int>(std::lround(v * scale_))); }

  std::optional<GeneratedScene> Build();

 private:
  int Category(const char* name) const {
    for (const auto& e : catalog_.entries()) {
      if (e.name == name) return e.category_id;
    }
    const auto infra = catalog_.CategoriesOfKind(UnitKind::kInfrastructure);
    return infra.empty() ? 0 : infra.front();
  }

  bool Free(const OBB& box, int margin = 0) const {
    if (!scene_.InBounds(box)) return false;
    const OBB grown{box.x - margin, box.y - margin, box.w + 2 * margin, box.h + 2 * margin};
    for (const auto& u : scene_.units) {
      if (Overlaps(grown, u.obb)) return false;
    }
    return !scene_.forbidden.any_in(grown);
  }

  int Add(int category, const OBB& box, Orientation o) {
    const int id = next_id_++;
    scene_.units.push_back(Unit{id, category, box, o});
    return id;
  }

  void Remove(int unit_id) {
    std::erase_if(scene_.units, [&](const Unit& u) { return u.unit_id == unit_id; });
  }

  void PlanRow(int row, int hedge_y, bool faces_up, int band_limit);
  void PlaceFences();
  bool PlacePool(std::vector<Slot>& slots, bool& in_row);
  void PlaceLamps(const std::vector<Slot>& slots);
  void PlaceBenches(int band_lo, int band_hi);
  void PlacePath(int band_lo, int band_hi);

  const GeneratorConfig& config_;
  const Catalog& catalog_;
  Rng rng_;
  double scale_;
  Scene scene_;
  int next_id_ = 0;
  std::vector<Slot> slots_;
};

void Builder::PlanRow(int row, int hedge_y, bool faces_up, int band_limit) {
  const auto arch = catalog_.CategoriesOfKind(UnitKind::kArchitectural);
  if (arch.empty()) return;
  const int gw = config_.grid_w;
  const int pairs = rng_.Uniform(1, 3);
  const int center_gap = 2 * S(rng_.Uniform(2, 5));
  const int edge_margin = S(3);
  const int hedge_h = S(1);
  const Orientation o = faces_up ? Orientation::k90 : Orientation::k270;

  int x = (gw + center_gap + 1) / 2;
  std::vector<Slot> right;
  for (int p = 0; p < pairs; ++p) {
    const int category = arch[static_cast<size_t>(rng_.Uniform(0, static_cast<int>(arch.size()) - 1))];
    const auto& entry = catalog_.at(category);
    const int w = S(entry.default_w);
    const int h = S(entry.default_h);
    if (x + w > gw - edge_margin) break;
    int y = faces_up ? hedge_y + hedge_h : hedge_y - h;
    if (!config_.row_placement) y += (faces_up ? 1 : -1) * S(rng_.Uniform(0, 4));
    const int hedge_at = faces_up ? y - hedge_h : y + h;
    if (faces_up ? y + h > band_limit : y < band_limit) break;
    right.push_back(Slot{category, OBB{x, y, w, h}, OBB{x, hedge_at, w, hedge_h}, o, row, p, true});
    x += w + S(rng_.Uniform(3, 6));
  }
  for (const auto& s : right) {
    slots_.push_back(s);
    Slot left = s;
    left.right_side = false;
    if (config_.symmetry) {
      left.house.x = gw - s.house.x - s.house.w;
    } else {
      // Same row, shifted off the mirror position.
      left.house.x = gw - s.house.x - s.house.w - S(rng_.Uniform(1, 2));
    }
    left.hedge.x = left.house.x;
    slots_.push_back(left);
  }
}

void Builder::PlaceFences() {
  const int gw = config_.grid_w;
  const int gh = config_.grid_h;
  const int fence = Category("fence");
  const int seg = S(8);
  const int gate_lo = gw / 2 - S(4);
  const int gate_hi = gw / 2 + S(4);
  auto horizontal = [&](int y, Orientation o, bool gate) {
    for (int x = 0; x < gw; x += seg) {
      const int w = std::min(seg, gw - x);
      if (gate && x < gate_hi && x + w > gate_lo) continue;
      Add(fence, OBB{x, y, w, 1}, o);
    }
  };
  auto vertical = [&](int x, Orientation o) {
    for (int y = 1; y < gh - 1; y += seg) {
      Add(fence, OBB{x, y, 1, std::min(seg, gh - 1 - y)}, o);
    }
  };
  if (rng_.Chance(0.8)) horizontal(0, Orientation::k90, true);
  if (rng_.Chance(0.6)) horizontal(gh - 1, Orientation::k270, false);
  const bool sides = rng_.Chance(0.7);
  if (sides) {
    vertical(0, Orientation::k0);
    vertical(gw - 1, Orientation::k180);
  }
}

bool Builder::PlacePool(std::vector<Slot>& slots, bool& in_row) {
  const int gw = config_.grid_w;
  const int margin = config_.pool_margin;
  in_row = false;
  double cx, cy, rx, ry;
  int row_lo = config_.grid_h, row_hi = 0;
  for (const auto& s : slots) {
    row_lo = std::min(row_lo, s.house.top());
    row_hi = std::max(row_hi, s.house.y);
  }
  if (!slots.empty() && rng_.Chance(0.6)) {
    Slot& s = slots[static_cast<size_t>(rng_.Uniform(0, static_cast<int>(slots.size()) - 1))];
    Remove(s.house_id);
    s.house_id = -1;
    const bool up = s.orientation == Orientation::k90;
    cx = s.house.center_x();
    cy = s.house.center_y() + (up ? 1 : -1) * S(2);
    rx = 0.5 * s.house.w + S(1.5);
    ry = 0.5 * s.house.h + S(rng_.Uniform(2, 4));
    in_row = true;
  } else {
    rx = S(rng_.Uniform(5, 9));
    ry = S(rng_.Uniform(4, 7));
    cx = rng_.Uniform(S(10), gw - S(10));
    const int lo = slots.empty() ? S(10) : row_lo + static_cast<int>(ry);
    const int hi = slots.empty() ? config_.grid_h - S(10) : row_hi - static_cast<int>(ry);
    if (hi < lo) return false;
    cy = rng_.Uniform(lo, hi);
  }
  ForbiddenMask mask(config_.grid_w, config_.grid_h);
  long cells = 0;
  for (int y = 0; y < config_.grid_h; ++y) {
    for (int x = 0; x < config_.grid_w; ++x) {
      const double u = (x + 0.5 - cx) / rx;
      const double v = (y + 0.5 - cy) / ry;
      if (u * u + v * v > 1.0) continue;
      const OBB cell{x - margin, y - margin, 1 + 2 * margin, 1 + 2 * margin};
      bool clear = true;
      for (const auto& unit : scene_.units) {
        if (Overlaps(cell, unit.obb)) {
          clear = false;
          break;
        }
      }
      if (clear) {
        mask.set(x, y, true);
        ++cells;
      }
    }
  }
  if (cells < S(12)) return false;
  scene_.forbidden = std::move(mask);
  return true;
}

void Builder::PlaceLamps(const std::vector<Slot>& slots) {
  const int lamp = Category("lamp");
  for (const auto& s : slots) {
    if (s.house_id < 0) continue;
    // Outermost house of the row on this side.
    bool outermost = true;
    for (const auto& t : slots) {
      if (t.row == s.row && t.right_side == s.right_side && t.pair > s.pair) outermost = false;
    }
    if (!outermost) continue;
    const bool up = s.orientation == Orientation::k90;
    const int lx = s.right_side ? s.house.right() : s.house.x - 1;
    const int ly = up ? s.house.top() - 1 : s.house.y;
    const OBB box{lx, ly, 1, 1};
    if (Free(box)) Add(lamp, box, s.orientation);
  }
}

void Builder::PlaceBenches(int band_lo, int band_hi) {
  if (band_hi - band_lo < S(6)) return;
  const int bench = Category("bench");
  const int count = rng_.Uniform(0, 2);
  for (int k = 0; k < count; ++k) {
    const int x = rng_.Uniform(S(3), config_.grid_w / 2 - S(8));
    const int y = rng_.Uniform(band_lo + S(2), band_hi - S(3));
    const OBB a{x, y, S(2), 1};
    const OBB b{config_.grid_w - x - S(2), y, S(2), 1};
    if (Free(a, config_.pool_margin) && Free(b, config_.pool_margin) && !Overlaps(a, b)) {
      Add(bench, a, Orientation::k0);
      Add(bench, b, Orientation::k180);
    }
  }
}

void Builder::PlacePath(int band_lo, int band_hi) {
  const int path = Category("path");
  const int w = S(2);
  const int h = S(3);
  const int x = config_.grid_w / 2 - w / 2;
  for (int y = band_lo + S(2); y + h <= band_hi - S(2); y += h) {
    const OBB tile{x, y, w, h};
    if (!Free(tile, config_.pool_margin)) break;
    Add(path, tile, Orientation::k90);
  }
}

std::optional<GeneratedScene> Builder::Build() {
  const int gh = config_.grid_h;
  const int hedge_lo = S(2) + rng_.Uniform(0, S(2));
  const bool second_row = rng_.Chance(0.85);
  const int hedge_hi = gh - 1 - S(2) - rng_.Uniform(0, S(2));
  const int mid = gh / 2;
  PlanRow(0, hedge_lo, true, mid - S(4));
  if (second_row) PlanRow(1, hedge_hi, false, mid + S(4));

  const int hedge = Category("hedge");
  for (auto& s : slots_) {
    s.hedge_id = Add(hedge, s.hedge, s.orientation);
    s.house_id = Add(s.category, s.house, s.orientation);
  }
  if (config_.fence_runs) PlaceFences();

  int band_lo = 0, band_hi = gh;
  for (const auto& s : slots_) {
    if (s.row == 0) band_lo = std::max(band_lo, s.house.top());
    if (s.row == 1) band_hi = std::min(band_hi, s.house.y);
  }
  if (band_hi == gh) band_hi = gh - S(6);

  bool pool_in_row = false;
  if (config_.pool && rng_.Chance(0.85)) {
    if (!PlacePool(slots_, pool_in_row)) return std::nullopt;
  }
  PlaceLamps(slots_);
  PlaceBenches(band_lo, band_hi);
  if (rng_.Chance(0.5)) PlacePath(band_lo, band_hi);

  // Held-out candidates: buildings whose mirror partner is still standing.
  std::vector<const Slot*> candidates;
  for (const auto& s : slots_) {
    if (s.house_id < 0) continue;
    const Slot* partner = nullptr;
    for (const auto& t : slots_) {
      if (t.row == s.row && t.pair == s.pair && t.right_side != s.right_side) partner = &t;
    }
    if (partner == nullptr || partner->house_id < 0) continue;
    candidates.push_back(&s);
  }
  if (candidates.empty()) return std::nullopt;
  const Slot& pick = *candidates[static_cast<size_t>(
      rng_.Uniform(0, static_cast<int>(candidates.size()) - 1))];

  GeneratedScene out;
  HeldOutPlacement& held = out.held_out;
  held.unit_id = pick.house_id;
  held.category_id = pick.category;
  held.obb = pick.house;
  held.orientation = pick.orientation;
  for (const auto& t : slots_) {
    if (t.row == pick.row && t.pair == pick.pair && t.right_side != pick.right_side) {
      held.mirror_partner_id = t.house_id;
    }
  }
  if (config_.row_placement) {
    const bool up = pick.orientation == Orientation::k90;
    held.row_edge = up ? RowEdge::kBottom : RowEdge::kTop;
    held.row_line = up ? pick.hedge.top() : pick.hedge.y;
  }
  Remove(pick.house_id);
  std::sort(scene_.units.begin(), scene_.units.end(),
            [](const Unit& a, const Unit& b) { return a.unit_id < b.unit_id; });

  const int count = static_cast<int>(scene_.units.size());
  if (count < config_.min_units || count > config_.max_units) return std::nullopt;
  out.scene = std::move(scene_);
  out.pool_in_row = pool_in_row;
  if (!ValidateScene(out.FullScene(), &catalog_).empty()) return std::nullopt;
  return out;
}

}  // namespace

GeneratorConfig GeneratorConfig::FullScale() {
  GeneratorConfig c;
  c.grid_w = 165;
  c.grid_h = 183;
  c.pool_margin = 3;
  c.min_units = 20;
  c.max_units = 80;
  return c;
}

void GeneratorConfig::Validate() const {
  if (grid_w < 32 || grid_h < 32) {
    Fail(ErrorCode::kInvalidArgument, "generator grid must be at least 32x32");
  }
  if (pool_margin < 0) Fail(ErrorCode::kInvalidArgument, "pool margin must be >= 0");
  if (min_units < 1 || max_units < min_units) {
    Fail(ErrorCode::kInvalidArgument, "units_per_scene range is empty");
  }
  if (max_attempts < 1) Fail(ErrorCode::kInvalidArgument, "max_attempts must be >= 1");
}

json GeneratorConfigToJson(const GeneratorConfig& c) {
  return {{"grid_w", c.grid_w},
          {"grid_h", c.grid_h},
          {"row_placement", c.row_placement},
          {"symmetry", c.symmetry},
          {"pool", c.pool},
          {"pool_margin", c.pool_margin},
          {"fence_runs", c.fence_runs},
          {"units_per_scene", {c.min_units, c.max_units}},
          {"max_attempts", c.max_attempts}};
}

GeneratorConfig GeneratorConfigFromJson(const json& doc) {
  GeneratorConfig c;
  try {
    if (doc.value("preset", std::string()) == "fullscale") c = GeneratorConfig::FullScale();
    c.grid_w = doc.value("grid_w", c.grid_w);
    c.grid_h = doc.value("grid_h", c.grid_h);
    c.row_placement = doc.value("row_placement", c.row_placement);
    c.symmetry = doc.value("symmetry", c.symmetry);
    c.pool = doc.value("pool", c.pool);
    c.pool_margin = doc.value("pool_margin", c.pool_margin);
    c.fence_runs = doc.value("fence_runs", c.fence_runs);
    if (doc.contains("units_per_scene")) {
      const auto range = doc.at("units_per_scene").get<std::vector<int>>();
      if (range.size() != 2) Fail(ErrorCode::kParse, "units_per_scene must be [min, max]");
      c.min_units = range[0];
      c.max_units = range[1];
    }
    c.max_attempts = doc.value("max_attempts", c.max_attempts);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("bad generator config: ") + e.what());
  }
  c.Validate();
  return c;
}

Scene GeneratedScene::FullScene() const {
  Scene full = scene;
  full.units.push_back(held_out.AsUnit());
  std::sort(full.units.begin(), full.units.end(),
            [](const Unit& a, const Unit& b) { return a.unit_id < b.unit_id; });
  return full;
}

GeneratedScene GenerateScene(const GeneratorConfig& config, const Catalog& catalog,
                             std::uint64_t seed) {
  config.Validate();
  if (catalog.CategoriesOfKind(UnitKind::kArchitectural).empty()) {
    Fail(ErrorCode::kInvalidArgument, "catalog has no architectural units");
  }
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    Builder builder(config, catalog,
                    SplitMix64(seed ^ (0xa0761d6478bd642fULL * (attempt + 1))));
    if (auto out = builder.Build()) return std::move(*out);
  }
  Fail(ErrorCode::kInvalidArgument,
       "generator could not fit a layout within " + std::to_string(config.min_units) +
           ".." + std::to_string(config.max_units) + " units after " +
           std::to_string(config.max_attempts) + " attempts");
}

json RulesSidecar(const GeneratedScene& g, const GeneratorConfig& config) {
  const auto& h = g.held_out;
  json held = {{"unit_id", h.unit_id},
               {"category", h.category_id},
               {"obb", {h.obb.x, h.obb.y, h.obb.w, h.obb.h}},
               {"orientation", Degrees(h.orientation)}};
  json rules = {{"symmetry", config.symmetry},
                {"mirror_axis_x", 0.5 * config.grid_w},
                {"mirror_partner_id", h.mirror_partner_id ? json(*h.mirror_partner_id) : json()},
                {"pool_margin", config.pool_margin},
                {"pool_in_row", g.pool_in_row}};
  if (h.row_edge) {
    rules["row_line"] = {{"axis", "y"},
                         {"value", h.row_line},
                         {"edge", *h.row_edge == RowEdge::kBottom ? "bottom" : "top"}};
  }
  return {{"format", "siteplan.rules"},
          {"version", 1},
          {"held_out", held},
          {"rules", rules},
          {"correct_region", {h.obb.x, h.obb.y, h.obb.w, h.obb.h}}};
}

HeldOutPlacement HeldOutFromSidecar(const json& doc) {
  HeldOutPlacement h;
  try {
    const json& held = doc.at("held_out");
    h.unit_id = held.at("unit_id").get<int>();
    h.category_id = held.at("category").get<int>();
    const auto box = held.at("obb").get<std::vector<int>>();
    if (box.size() != 4) Fail(ErrorCode::kParse, "held_out.obb must have 4 entries");
    h.obb = OBB{box[0], box[1], box[2], box[3]};
    h.orientation = OrientationFromDegrees(held.at("orientation").get<int>());
    const json& rules = doc.at("rules");
    if (!rules.at("mirror_partner_id").is_null()) {
      h.mirror_partner_id = rules.at("mirror_partner_id").get<int>();
    }
    if (rules.contains("row_line")) {
      h.row_line = rules.at("row_line").at("value").get<int>();
      h.row_edge = rules.at("row_line").at("edge").get<std::string>() == "bottom"
                       ? RowEdge::kBottom
                       : RowEdge::kTop;
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("malformed rules sidecar: ") + e.what());
  }
  return h;
}

std::vector<const DatasetEntry*> DatasetManifest::Split(bool train) const {
  std::vector<const DatasetEntry*> out;
  for (const auto& e : entries) {
    if (e.train == train) out.push_back(&e);
  }
  return out;
}

DatasetManifest GenerateDataset(const GeneratorConfig& config, const Catalog& catalog,
                                int n, std::uint64_t seed,
                                const std::filesystem::path& out_dir) {
  if (n < 1) Fail(ErrorCode::kInvalidArgument, "dataset size must be >= 1");
  config.Validate();
  const int n_test = static_cast<int>(std::floor(n * (1.0 - kDefaultTrainFraction) + 1e-9));
  DatasetManifest manifest;
  manifest.root = out_dir;
  manifest.catalog_hash = catalog.Hash();
  manifest.seed = seed;
  json scenes = json::array();
  for (int i = 0; i < n; ++i) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "%05d", i);
    DatasetEntry entry;
    entry.scene_file = std::string("scenes/") + stem + ".scene";
    entry.rules_file = std::string("rules/") + stem + ".rules.json";
    entry.seed = SplitMix64(seed + static_cast<std::uint64_t>(i));
    entry.train = i < n - n_test;
    const GeneratedScene g = GenerateScene(config, catalog, entry.seed);
    WriteScene(g.scene, out_dir / entry.scene_file);
    WriteTextFile(out_dir / entry.rules_file, RulesSidecar(g, config).dump(1) + "\n");
    scenes.push_back({{"scene", entry.scene_file},
                      {"rules", entry.rules_file},
                      {"seed", HexU64(entry.seed)},
                      {"split", entry.train ? "train" : "test"}});
    manifest.entries.push_back(std::move(entry));
  }
  const json doc = {{"format", "siteplan.dataset"},
                    {"version", 1},
                    {"catalog", {{"name", catalog.name()}, {"hash", catalog.Hash()}}},
                    {"generator", GeneratorConfigToJson(config)},
                    {"seed", HexU64(seed)},
                    {"train_fraction", kDefaultTrainFraction},
                    {"counts", {{"train", n - n_test}, {"test", n_test}}},
                    {"scenes", scenes}};
  const std::string text = doc.dump(1) + "\n";
  WriteTextFile(out_dir / "manifest.json", text);
  manifest.hash = Fnv1aHex(text);
  return manifest;
}

DatasetManifest ReadManifest(const std::filesystem::path& dataset_dir) {
  const std::string text = ReadTextFile(dataset_dir / "manifest.json");
  DatasetManifest m;
  m.root = dataset_dir;
  m.hash = Fnv1aHex(text);
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != "siteplan.dataset") {
      Fail(ErrorCode::kParse, "not a dataset manifest");
    }
    m.catalog_hash = doc.at("catalog").at("hash").get<std::string>();
    m.seed = std::stoull(doc.at("seed").get<std::string>(), nullptr, 16);
    for (const auto& s : doc.at("scenes")) {
      DatasetEntry e;
      e.scene_file = s.at("scene").get<std::string>();
      e.rules_file = s.at("rules").get<std::string>();
      e.seed = std::stoull(s.at("seed").get<std::string>(), nullptr, 16);
      e.train = s.at("split").get<std::string>() == "train";
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse,
         (dataset_dir / "manifest.json").string() + ": " + e.what());
  }
  return m;
}

Scene LoadFullScene(const DatasetManifest& manifest, const DatasetEntry& entry) {
  Scene scene = ReadScene(manifest.root / entry.scene_file);
  const auto rules_path = manifest.root / entry.rules_file;
  json rules;
  try {
    rules = json::parse(ReadTextFile(rules_path));
  } catch (const json::parse_error& e) {
    Fail(ErrorCode::kParse, rules_path.string() + ": " + e.what());
  }
  const HeldOutPlacement held = HeldOutFromSidecar(rules);
  scene.units.push_back(held.AsUnit());
  std::sort(scene.units.begin(), scene.units.end(),
            [](const Unit& a, const Unit& b) { return a.unit_id < b.unit_id; });
  return scene;
}

}  // namespace siteplan
