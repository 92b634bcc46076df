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

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "siteplan/error.hpp"
#include "siteplan/graph.hpp"
#include "siteplan/scene_io.hpp"
#include "siteplan/synth.hpp"

using namespace siteplan;

namespace {

const Catalog& Desk() {
  static const Catalog c = Catalog::DeskDefault();
  return c;
}

// Row lines re-fit from the remaining units: cluster all bottom and top
// edges (values within 1 grid join a cluster); clusters of 3 or more edges
// count as lines, located at the cluster mean.
std::vector<double> FitRowLines(const Scene& scene) {
  std::vector<int> edges;
  for (const auto& u : scene.units) {
    edges.push_back(u.obb.y);
    edges.push_back(u.obb.top());
  }
  std::sort(edges.begin(), edges.end());
  std::vector<double> lines;
  for (size_t i = 0; i < edges.size();) {
    size_t j = i;
    double sum = 0;
    while (j < edges.size() && edges[j] - edges[i] <= 1) sum += edges[j++];
    if (j - i >= 3) lines.push_back(sum / static_cast<double>(j - i));
    i = j;
  }
  return lines;
}

}  // namespace

TEST_CASE("generate_scene determinism") {
  const GeneratorConfig cfg;
  const auto a = GenerateScene(cfg, Desk(), 7);
  const auto b = GenerateScene(cfg, Desk(), 7);
  CHECK(SceneToString(a.scene) == SceneToString(b.scene));
  CHECK(RulesSidecar(a, cfg).dump() == RulesSidecar(b, cfg).dump());
  CHECK(SceneToString(GenerateScene(cfg, Desk(), 8).scene) != SceneToString(a.scene));
}

TEST_CASE("generated scenes hold their planted rules") {
  const GeneratorConfig cfg;
  int near_row = 0, total = 0, pools = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto gen = GenerateScene(cfg, Desk(), seed);
    const Scene full = gen.FullScene();
    REQUIRE(ValidateScene(full, &Desk()).empty());
    REQUIRE(ValidateScene(gen.scene, &Desk()).empty());
    const int n = static_cast<int>(full.units.size());
    CHECK(n >= cfg.min_units);
    CHECK(n <= cfg.max_units);
    CHECK(Desk().at(gen.held_out.category_id).kind == UnitKind::kArchitectural);
    CHECK(gen.scene.find(gen.held_out.unit_id) == nullptr);
    if (gen.scene.forbidden.count() > 0) ++pools;

    // Mirror partner present and reflected about the vertical center line.
    REQUIRE(gen.held_out.mirror_partner_id.has_value());
    const Unit* partner = gen.scene.find(*gen.held_out.mirror_partner_id);
    REQUIRE(partner != nullptr);
    const double reflected_x = cfg.grid_w - (partner->obb.x + partner->obb.w);
    CHECK(std::abs(reflected_x - gen.held_out.obb.x) <= 1.0);
    CHECK(std::abs(partner->obb.y - gen.held_out.obb.y) <= 1);

    ++total;
    const auto lines = FitRowLines(gen.scene);
    const OBB& h = gen.held_out.obb;
    const bool on_line = std::any_of(lines.begin(), lines.end(), [&](double line) {
      return std::abs(h.y - line) <= 2.0 || std::abs(h.top() - line) <= 2.0;
    });
    if (on_line) ++near_row;
  }
  CHECK(static_cast<double>(near_row) / total >= 0.95);
  CHECK(pools > 500);
}

TEST_CASE("sidecar round trip") {
  const GeneratorConfig cfg;
  const auto gen = GenerateScene(cfg, Desk(), 12);
  const auto held = HeldOutFromSidecar(RulesSidecar(gen, cfg));
  CHECK(held.unit_id == gen.held_out.unit_id);
  CHECK(held.obb == gen.held_out.obb);
  CHECK(held.orientation == gen.held_out.orientation);
  CHECK(held.mirror_partner_id == gen.held_out.mirror_partner_id);
  CHECK(held.row_line == gen.held_out.row_line);
}

TEST_CASE("generator config") {
  GeneratorConfig bad;
  bad.min_units = 50;
  bad.max_units = 10;
  CHECK_THROWS_AS(bad.Validate(), Error);
  bad = GeneratorConfig{};
  bad.pool_margin = -1;
  CHECK_THROWS_AS(bad.Validate(), Error);
  const auto back = GeneratorConfigFromJson(GeneratorConfigToJson(GeneratorConfig{}));
  CHECK(GeneratorConfigToJson(back) == GeneratorConfigToJson(GeneratorConfig{}));
  GeneratorConfig tight;
  tight.min_units = 300;
  tight.max_units = 400;
  tight.max_attempts = 3;
  CHECK_THROWS_AS(GenerateScene(tight, Desk(), 1), Error);
}

TEST_CASE("generate_dataset") {
  const auto root = std::filesystem::temp_directory_path() / "siteplan_test_dataset";
  std::filesystem::remove_all(root);
  const GeneratorConfig cfg;
  const auto m = GenerateDataset(cfg, Desk(), 10, 42, root / "a");
  CHECK(m.entries.size() == 10);
  CHECK(m.Split(true).size() == 8);
  CHECK(m.Split(false).size() == 2);
  for (const auto& e : m.entries) CHECK(std::filesystem::exists(root / "a" / e.scene_file));
  const auto again = GenerateDataset(cfg, Desk(), 10, 42, root / "b");
  CHECK(again.hash == m.hash);
  const auto read = ReadManifest(root / "a");
  CHECK(read.hash == m.hash);
  CHECK(read.entries.size() == 10);
  const Scene full = LoadFullScene(read, read.entries[0]);
  CHECK(ValidateScene(full, &Desk()).empty());
  CHECK_THROWS_AS(GenerateDataset(cfg, Desk(), 0, 42, root / "c"), Error);
  std::filesystem::remove_all(root);
}

TEST_CASE("generated graphs keep the extraction invariants") {
  const GeneratorConfig cfg;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scene s = GenerateScene(cfg, Desk(), seed).FullScene();
    const auto g = BuildGraph(s, Desk());
    CHECK(g.size() <= static_cast<int>(s.units.size()));
    for (const auto& e : g.edges) {
      const auto* r = g.find_edge(e.dst, e.src);
      REQUIRE(r != nullptr);
      CHECK(r->distance == e.distance);
    }
  }
}
