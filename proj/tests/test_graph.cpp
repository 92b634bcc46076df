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
#include <random>

#include "doctest.h"
#include "oracles/visibility_oracle.hpp"
#include "siteplan/graph.hpp"
#include "siteplan/scene.hpp"

using namespace siteplan;

namespace {

const Catalog& Desk() {
  static const Catalog c = Catalog::DeskDefault();
  return c;
}

Scene SceneOf(std::initializer_list<Unit> units, int grid = 64) {
  Scene s = Scene::Empty(grid, grid, Desk());
  s.units = units;
  return s;
}

constexpr int kHouse = 6;
constexpr int kFence = 0;
constexpr int kWall = 5;

}  // namespace

TEST_CASE("orientation frames") {
  CHECK(ToWorldSide(Orientation::k0, Direction::kFront) == WorldSide::kPosX);
  CHECK(ToWorldSide(Orientation::k0, Direction::kLeft) == WorldSide::kPosY);
  CHECK(ToWorldSide(Orientation::k90, Direction::kFront) == WorldSide::kPosY);
  CHECK(ToWorldSide(Orientation::k90, Direction::kRight) == WorldSide::kPosX);
  CHECK(ToWorldSide(Orientation::k180, Direction::kBack) == WorldSide::kPosX);
  for (int q = 0; q < 4; ++q) {
    const auto o = OrientationFromDegrees(90 * q);
    for (int d = 0; d < 4; ++d) {
      CHECK(ToDirection(o, ToWorldSide(o, static_cast<Direction>(d))) == static_cast<Direction>(d));
    }
  }
  for (int t = 1; t <= kNumEdgeTypes; ++t) {
    CHECK(EdgeTypeIndex(TypeDirection(t), TypeBin(t)) == t);
  }
}

TEST_CASE("raycast_visibility") {
  SUBCASE("single unit sees nothing") {
    const Scene s = SceneOf({{1, kHouse, {10, 10, 8, 8}, Orientation::k0}});
    for (const auto& side : RaycastVisibility(s, s.units[0])) CHECK(side.empty());
  }
  SUBCASE("two facing boxes") {
    const Scene s = SceneOf({{1, kHouse, {0, 0, 10, 10}, Orientation::k0},
                             {2, kHouse, {20, 0, 10, 10}, Orientation::k180}});
    const auto a = RaycastVisibility(s, s.units[0]);
    const auto b = RaycastVisibility(s, s.units[1]);
    CHECK(a[static_cast<int>(Direction::kFront)].at(2) == 1.0);
    CHECK(b[static_cast<int>(Direction::kFront)].at(1) == 1.0);
    CHECK(a[static_cast<int>(Direction::kBack)].empty());
  }
  SUBCASE("interposed box occludes") {
    const Scene s = SceneOf({{1, kHouse, {0, 0, 10, 10}, Orientation::k0},
                             {2, kHouse, {30, 0, 10, 10}, Orientation::k0},
                             {3, kWall, {15, 0, 4, 10}, Orientation::k0}});
    const auto a = RaycastVisibility(s, s.units[0]);
    const auto& front = a[static_cast<int>(Direction::kFront)];
    CHECK(front.count(2) == 0);
    CHECK(front.at(3) == 1.0);
  }
}

TEST_CASE("visibility threshold is strict") {
  // Both 20-long facing sides see each other through a 3-wide gap: 3/20 = 0.15.
  std::vector<RelationNode> nodes(3);
  nodes[0] = {0, {1}, {0, 0, 2, 20}, kHouse, Orientation::k0};
  nodes[1] = {1, {2}, {10, 0, 3, 20}, kHouse, Orientation::k0};
  nodes[2] = {2, {3}, {4, 3, 2, 17}, kWall, Orientation::k0};
  std::vector<Occluder> occ;
  for (const auto& n : nodes) occ.push_back({n.node_id, n.merged_obb});
  const auto vis = CastFromBox(nodes[0].merged_obb, 0, occ);
  CHECK(vis[static_cast<int>(WorldSide::kPosX)].at(1) == doctest::Approx(0.15));
  const auto edges = ExtractEdges(nodes, 1.0);
  CHECK(std::none_of(edges.begin(), edges.end(),
                     [](const RelationEdge& e) { return e.src + e.dst == 1; }));
  // Widening the gap by one row crosses the threshold.
  nodes[2].merged_obb = {4, 4, 2, 16};
  const auto wider = ExtractEdges(nodes, 1.0);
  CHECK(std::count_if(wider.begin(), wider.end(),
                      [](const RelationEdge& e) { return e.src + e.dst == 1; }) == 2);
}

TEST_CASE("alignment_attributes") {
  const OBB a{0, 0, 10, 10};
  AlignmentBits all;
  all.fill(true);
  CHECK(AlignmentAttributes(a, a) == all);
  CHECK(AlignmentAttributes(a, {0, 20, 10, 10}) ==
        AlignmentBits{true, true, true, false, false, false});
  // Centered inside a: the vertical centers coincide too (3 + 4/2 == 5).
  CHECK(AlignmentAttributes(a, {3, 0, 4, 10}) ==
        AlignmentBits{false, true, false, true, true, true});
  CHECK(AlignmentAttributes(a, {2, 0, 4, 10}) ==
        AlignmentBits{false, false, false, true, true, true});
}

TEST_CASE("merge_nodes") {
  SUBCASE("three collinear walls merge to one node") {
    const Scene s = SceneOf({{1, kWall, {10, 10, 4, 1}, Orientation::k0},
                             {2, kWall, {14, 10, 4, 1}, Orientation::k0},
                             {3, kWall, {18, 10, 4, 1}, Orientation::k0}});
    const auto nodes = MergeNodes(s, Desk());
    REQUIRE(nodes.size() == 1);
    CHECK(nodes[0].merged_obb == OBB{10, 10, 12, 1});
    CHECK(nodes[0].member_unit_ids == std::vector<int>{1, 2, 3});
  }
  SUBCASE("different categories stay apart") {
    const Scene s = SceneOf({{1, kWall, {10, 10, 4, 1}, Orientation::k0},
                             {2, kFence, {14, 10, 4, 1}, Orientation::k0}});
    CHECK(MergeNodes(s, Desk()).size() == 2);
  }
  SUBCASE("gap of one grid stays apart") {
    const Scene s = SceneOf({{1, kWall, {10, 10, 4, 1}, Orientation::k0},
                             {2, kWall, {15, 10, 4, 1}, Orientation::k0}});
    CHECK(MergeNodes(s, Desk()).size() == 2);
  }
  SUBCASE("architectural units never merge") {
    const Scene s = SceneOf({{1, kHouse, {10, 10, 8, 8}, Orientation::k0},
                             {2, kHouse, {18, 10, 8, 8}, Orientation::k0}});
    CHECK(MergeNodes(s, Desk()).size() == 2);
  }
  SUBCASE("vertical run") {
    const Scene s = SceneOf({{1, kFence, {5, 0, 1, 4}, Orientation::k90},
                             {2, kFence, {5, 4, 1, 4}, Orientation::k90}});
    const auto nodes = MergeNodes(s, Desk());
    REQUIRE(nodes.size() == 1);
    CHECK(nodes[0].merged_obb == OBB{5, 0, 1, 8});
  }
}

TEST_CASE("build_graph examples") {
  const Scene empty = SceneOf({});
  const auto g0 = BuildGraph(empty, Desk());
  CHECK(g0.size() == 0);
  CHECK(g0.adjacency.empty());

  const Scene s = SceneOf({{1, kHouse, {0, 0, 10, 10}, Orientation::k0},
                           {2, kHouse, {20, 0, 10, 10}, Orientation::k180}});
  const auto g = BuildGraph(s, Desk());
  REQUIRE(g.size() == 2);
  CHECK(g.edges.size() == 2);
  CHECK(std::count_if(g.adjacency.begin(), g.adjacency.end(), [](int v) { return v != 0; }) == 2);
  const double scale = DistanceScale(64);
  CHECK(g.A(0, 1) == EdgeTypeIndex(Direction::kFront, ClassifyDistance(10, scale)));
  CHECK(g.A(1, 0) == EdgeTypeIndex(Direction::kFront, ClassifyDistance(10, scale)));

  SUBCASE("touching walls are mutual next_to") {
    const Scene w = SceneOf({{1, kWall, {10, 10, 4, 1}, Orientation::k0},
                             {2, kFence, {14, 10, 4, 1}, Orientation::k0}});
    const auto gw = BuildGraph(w, Desk());
    REQUIRE(gw.edges.size() == 2);
    for (const auto& e : gw.edges) CHECK(e.bin == DistanceBin::kNextTo);
  }
  SUBCASE("enclosed node sees distant neighbours") {
    // Full-scale grid: a small node in the middle of a ring of walls 100 away.
    Scene ring = Scene::Empty(260, 260, Desk());
    ring.units = {{1, kHouse, {125, 125, 10, 10}, Orientation::k0},
                  {2, kWall, {25, 235, 210, 1}, Orientation::k0},
                  {3, kHouse, {25, 24, 210, 1}, Orientation::k0},
                  {4, kHouse, {24, 24, 1, 212}, Orientation::k0},
                  {5, kHouse, {235, 24, 1, 212}, Orientation::k0}};
    const auto gr = BuildGraph(ring, Desk());
    const double s_ring = DistanceScale(260);
    int center = -1;
    for (const auto& n : gr.nodes) {
      if (n.member_unit_ids == std::vector<int>{1}) center = n.node_id;
    }
    REQUIRE(center >= 0);
    int distant = 0;
    for (const auto& e : gr.edges) {
      if (e.src != center) continue;
      CHECK(e.distance == 100.0);
      CHECK(e.bin == ClassifyDistance(100.0, s_ring));
      ++distant;
    }
    CHECK(distant == 4);
  }
}

TEST_CASE("one-hot adjacency round trip and json") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    const Scene s = oracle::RandomSmallScene(rng, Desk(), 10);
    const auto g = BuildGraph(s, Desk());
    const auto oh = OneHotAdjacency(g);
    const int n = g.size();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        int hot = -1, count = 0;
        for (int c = 0; c < kNumEdgeClasses; ++c) {
          if (oh[(static_cast<size_t>(i) * kNumEdgeClasses + c) * n + j] == 1.0f) {
            hot = c;
            ++count;
          }
        }
        CHECK(count == 1);
        CHECK(hot == g.A(i, j));
      }
    }
    const auto back = GraphFromJson(GraphToJson(g));
    CHECK(back.adjacency == g.adjacency);
    CHECK(GraphToJson(back) == GraphToJson(g));
  }
}

TEST_CASE("edge set matches the dense-ray oracle on small scenes") {
  std::mt19937_64 rng(2026);
  int mismatches = 0;
  for (int k = 0; k < 60; ++k) {
    const Scene s = oracle::RandomSmallScene(rng, Desk(), 6);
    const auto g = BuildGraph(s, Desk());
    const auto expected = oracle::EdgeSet(oracle::BoxesOf(g), s.grid_w, s.grid_h);
    if (expected != oracle::EdgeSetOf(g)) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("graph invariants on random scenes") {
  std::mt19937_64 rng(77);
  for (int k = 0; k < 100; ++k) {
    const Scene s = oracle::RandomSmallScene(rng, Desk(), 14);
    const auto g = BuildGraph(s, Desk());
    const double scale = DistanceScale(s.grid_w);
    CHECK(g.size() <= static_cast<int>(s.units.size()));
    for (const auto& e : g.edges) {
      const auto* r = g.find_edge(e.dst, e.src);
      REQUIRE(r != nullptr);
      CHECK(r->distance == e.distance);
      const auto iv = BinBounds(e.bin);
      const double lo = iv.lower * scale, hi = iv.upper * scale;
      CHECK((iv.lower_open ? e.distance > lo : e.distance >= lo));
      CHECK(e.distance <= hi);
    }
    // Merge footprint preservation and idempotence.
    const auto nodes = MergeNodes(s, Desk());
    std::vector<int> members;
    long area = 0;
    for (const auto& n : nodes) {
      members.insert(members.end(), n.member_unit_ids.begin(), n.member_unit_ids.end());
      area += n.merged_obb.area();
    }
    std::sort(members.begin(), members.end());
    std::vector<int> ids;
    long unit_area = 0;
    for (const auto& u : s.units) {
      ids.push_back(u.unit_id);
      unit_area += u.obb.area();
    }
    std::sort(ids.begin(), ids.end());
    CHECK(members == ids);
    CHECK(area == unit_area);
    Scene merged = Scene::Empty(s.grid_w, s.grid_h, Desk());
    for (const auto& n : nodes) {
      merged.units.push_back({n.member_unit_ids.front(), n.category_id, n.merged_obb, n.orientation});
    }
    CHECK(MergeNodes(merged, Desk()).size() == nodes.size());
  }
}
