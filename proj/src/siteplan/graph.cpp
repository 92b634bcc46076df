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

#include "siteplan/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "siteplan/error.hpp"

namespace siteplan {

namespace {

// Quarter turns counter-clockwise from +x.
int QuarterOf(WorldSide s) {
  switch (s) {
    case WorldSide::kPosX:
      return 0;
    case WorldSide::kPosY:
      return 1;
    case WorldSide::kNegX:
      return 2;
    case WorldSide::kNegY:
      return 3;
  }
  return 0;
}

WorldSide SideOfQuarter(int q) {
  constexpr WorldSide kSides[] = {WorldSide::kPosX, WorldSide::kPosY,
                                  WorldSide::kNegX, WorldSide::kNegY};
  return kSides[((q % 4) + 4) % 4];
}

// Offset of each direction from the heading, in quarter turns.
int DirectionOffset(Direction d) {
  switch (d) {
    case Direction::kFront:
      return 0;
    case Direction::kLeft:
      return 1;
    case Direction::kBack:
      return 2;
    case Direction::kRight:
      return 3;
  }
  return 0;
}

// Direction of `to` seen from `from` when no ray of `from` reaches it: the
// dominant axis of the center offset, in `from`'s frame.
Direction CenterDirection(const RelationNode& from, const OBB& to) {
  const double vx = to.center_x() - from.merged_obb.center_x();
  const double vy = to.center_y() - from.merged_obb.center_y();
  const int q = Degrees(from.orientation) / 90;
  constexpr int kDx[] = {1, 0, -1, 0};
  constexpr int kDy[] = {0, 1, 0, -1};
  const double forward = vx * kDx[q] + vy * kDy[q];
  const double leftward = vx * kDx[(q + 1) % 4] + vy * kDy[(q + 1) % 4];
  if (std::abs(forward) >= std::abs(leftward)) {
    return forward >= 0 ? Direction::kFront : Direction::kBack;
  }
  return leftward > 0 ? Direction::kLeft : Direction::kRight;
}

struct NodeVisibility {
  // [direction in the node's frame] -> {other node -> fraction}
  SideVisibility by_direction;

  double best(int other) const {
    double b = 0.0;
    for (const auto& side : by_direction) {
      auto it = side.find(other);
      if (it != side.end()) b = std::max(b, it->second);
    }
    return b;
  }
};

NodeVisibility VisibilityOf(const RelationNode& node,
                            std::span<const Occluder> occluders) {
  const WorldVisibility world = CastFromBox(node.merged_obb, node.node_id, occluders);
  NodeVisibility out;
  for (int s = 0; s < 4; ++s) {
    const Direction d = ToDirection(node.orientation, static_cast<WorldSide>(s));
    out.by_direction[static_cast<size_t>(d)] = world[static_cast<size_t>(s)];
  }
  return out;
}

Direction EdgeDirection(const RelationNode& from, const NodeVisibility& vis,
                        const RelationNode& to) {
  double best = 0.0;
  Direction dir = Direction::kFront;
  for (int d = 0; d < kNumDirections; ++d) {
    const auto& side = vis.by_direction[static_cast<size_t>(d)];
    auto it = side.find(to.node_id);
    if (it != side.end() && it->second > best) {
      best = it->second;
      dir = static_cast<Direction>(d);
    }
  }
  if (best > 0.0) return dir;
  return CenterDirection(from, to.merged_obb);
}

}  // namespace

const char* DirectionName(Direction d) {
  switch (d) {
    case Direction::kFront:
      return "front";
    case Direction::kBack:
      return "back";
    case Direction::kRight:
      return "right";
    case Direction::kLeft:
      return "left";
  }
  return "?";
}

Direction ParseDirection(const std::string& name) {
  for (int d = 0; d < kNumDirections; ++d) {
    if (name == DirectionName(static_cast<Direction>(d))) {
      return static_cast<Direction>(d);
    }
  }
  Fail(ErrorCode::kParse, "unknown direction '" + name + "'");
}

DistanceBin ParseDistanceBin(const std::string& name) {
  for (int b = 0; b < 4; ++b) {
    if (name == DistanceBinName(static_cast<DistanceBin>(b))) {
      return static_cast<DistanceBin>(b);
    }
  }
  Fail(ErrorCode::kParse, "unknown distance bin '" + name + "'");
}

WorldSide ToWorldSide(Orientation o, Direction d) {
  return SideOfQuarter(Degrees(o) / 90 + DirectionOffset(d));
}

Direction ToDirection(Orientation o, WorldSide s) {
  const int offset = ((QuarterOf(s) - Degrees(o) / 90) % 4 + 4) % 4;
  constexpr Direction kByOffset[] = {Direction::kFront, Direction::kLeft,
                                     Direction::kBack, Direction::kRight};
  return kByOffset[offset];
}

WorldVisibility CastFromBox(const OBB& source, int source_id,
                            std::span<const Occluder> occluders) {
  WorldVisibility out;
  for (int s = 0; s < 4; ++s) {
    const auto side = static_cast<WorldSide>(s);
    const bool along_x = side == WorldSide::kPosX || side == WorldSide::kNegX;
    const int rays = along_x ? source.h : source.w;
    std::map<int, int> hits;
    for (int k = 0; k < rays; ++k) {
      const double lateral = (along_x ? source.y : source.x) + k + 0.5;
      double nearest = std::numeric_limits<double>::infinity();
      int nearest_id = -1;
      for (const auto& occ : occluders) {
        if (occ.id == source_id) continue;
        const OBB& b = occ.box;
        double t;
        if (along_x) {
          if (!(b.y < lateral && lateral < b.top())) continue;
          if (side == WorldSide::kPosX) {
            if (b.x < source.right()) continue;
            t = b.x - source.right();
          } else {
            if (b.right() > source.x) continue;
            t = source.x - b.right();
          }
        } else {
          if (!(b.x < lateral && lateral < b.right())) continue;
          if (side == WorldSide::kPosY) {
            if (b.y < source.top()) continue;
            t = b.y - source.top();
          } else {
            if (b.top() > source.y) continue;
            t = source.y - b.top();
          }
        }
        if (t < nearest) {
          nearest = t;
          nearest_id = occ.id;
        }
      }
      if (nearest_id >= 0) ++hits[nearest_id];
    }
    for (const auto& [id, count] : hits) {
      out[static_cast<size_t>(s)][id] = static_cast<double>(count) / rays;
    }
  }
  return out;
}

SideVisibility RaycastVisibility(const Scene& scene, const Unit& unit) {
  std::vector<Occluder> occluders;
  occluders.reserve(scene.units.size());
  for (const auto& u : scene.units) occluders.push_back({u.unit_id, u.obb});
  const WorldVisibility world = CastFromBox(unit.obb, unit.unit_id, occluders);
  SideVisibility out;
  for (int s = 0; s < 4; ++s) {
    const Direction d = ToDirection(unit.orientation, static_cast<WorldSide>(s));
    out[static_cast<size_t>(d)] = world[static_cast<size_t>(s)];
  }
  return out;
}

const RelationEdge* RelationGraph::find_edge(int src, int dst) const {
  auto it = std::lower_bound(edges.begin(), edges.end(), std::pair{src, dst},
                             [](const RelationEdge& e, const std::pair<int, int>& key) {
                               return std::pair{e.src, e.dst} < key;
                             });
  if (it != edges.end() && it->src == src && it->dst == dst) return &*it;
  return nullptr;
}

AlignmentBits AlignmentAttributes(const OBB& a, const OBB& b) {
  auto near = [](double u, double v) { return std::abs(u - v) <= kAlignTolerance; };
  return {near(a.x, b.x),
          near(a.center_x(), b.center_x()),
          near(a.right(), b.right()),
          near(a.top(), b.top()),
          near(a.center_y(), b.center_y()),
          near(a.y, b.y)};
}

std::vector<RelationNode> MergeNodes(const Scene& scene, const Catalog& catalog) {
  struct Group {
    std::vector<int> members;
    OBB box;
    int category;
    Orientation orientation;
    bool infrastructure;
  };
  std::vector<Unit> units = scene.units;
  std::sort(units.begin(), units.end(),
            [](const Unit& a, const Unit& b) { return a.unit_id < b.unit_id; });
  std::vector<Group> groups;
  groups.reserve(units.size());
  for (const auto& u : units) {
    groups.push_back({{u.unit_id}, u.obb, u.category_id, u.orientation,
                      catalog.at(u.category_id).kind == UnitKind::kInfrastructure});
  }

  auto mergeable = [&](size_t ia, size_t ib) {
    const Group& a = groups[ia];
    const Group& b = groups[ib];
    if (!a.infrastructure || !b.infrastructure) return false;
    if (a.category != b.category || a.orientation != b.orientation) return false;
    const bool x_run = a.box.y == b.box.y && a.box.h == b.box.h;
    const bool y_run = a.box.x == b.box.x && a.box.w == b.box.w;
    if (!x_run && !y_run) return false;
    if (ObbDistance(a.box, b.box) != 0.0) return false;
    std::vector<Occluder> occluders;
    occluders.reserve(groups.size());
    for (size_t g = 0; g < groups.size(); ++g) {
      occluders.push_back({static_cast<int>(g), groups[g].box});
    }
    auto full_view = [&](size_t from, size_t to) {
      const auto vis = CastFromBox(groups[from].box, static_cast<int>(from), occluders);
      for (const auto& side : vis) {
        auto it = side.find(static_cast<int>(to));
        if (it != side.end() && it->second == 1.0) return true;
      }
      return false;
    };
    return full_view(ia, ib) && full_view(ib, ia);
  };

  // Groups stay sorted by their smallest member id, so the first hit of this
  // scan is the lowest-id pair.
  for (bool merged = true; merged;) {
    merged = false;
    for (size_t a = 0; a < groups.size() && !merged; ++a) {
      for (size_t b = a + 1; b < groups.size() && !merged; ++b) {
        if (!mergeable(a, b)) continue;
        Group& into = groups[a];
        into.box = Union(into.box, groups[b].box);
        into.members.insert(into.members.end(), groups[b].members.begin(),
                            groups[b].members.end());
        std::sort(into.members.begin(), into.members.end());
        groups.erase(groups.begin() + static_cast<long>(b));
        merged = true;
      }
    }
  }

  std::sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
    if (a.box.y != b.box.y) return a.box.y < b.box.y;
    if (a.box.x != b.box.x) return a.box.x < b.box.x;
    return a.members.front() < b.members.front();
  });
  std::vector<RelationNode> nodes;
  nodes.reserve(groups.size());
  for (auto& g : groups) {
    RelationNode node;
    node.node_id = static_cast<int>(nodes.size());
    node.member_unit_ids = std::move(g.members);
    node.merged_obb = g.box;
    node.category_id = g.category;
    node.orientation = g.orientation;
    nodes.push_back(std::move(node));
  }
  return nodes;
}

std::vector<RelationEdge> ExtractEdges(std::span<const RelationNode> nodes,
                                       double distance_scale) {
  const int n = static_cast<int>(nodes.size());
  std::vector<Occluder> occluders;
  occluders.reserve(nodes.size());
  for (int i = 0; i < n; ++i) {
    if (nodes[static_cast<size_t>(i)].node_id != i) {
      Fail(ErrorCode::kInvalidArgument, "node ids must match their index");
    }
    occluders.push_back({i, nodes[static_cast<size_t>(i)].merged_obb});
  }
  std::vector<NodeVisibility> vis;
  vis.reserve(nodes.size());
  for (const auto& node : nodes) vis.push_back(VisibilityOf(node, occluders));

  std::vector<RelationEdge> edges;
  auto make_edge = [&](int from, int to) {
    const auto& a = nodes[static_cast<size_t>(from)];
    const auto& b = nodes[static_cast<size_t>(to)];
    RelationEdge e;
    e.src = from;
    e.dst = to;
    e.direction = EdgeDirection(a, vis[static_cast<size_t>(from)], b);
    e.distance = ObbDistance(a.merged_obb, b.merged_obb);
    e.bin = ClassifyDistance(e.distance, distance_scale);
    e.alignment = AlignmentAttributes(a.merged_obb, b.merged_obb);
    return e;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const bool related = vis[static_cast<size_t>(i)].best(j) > kVisibilityThreshold ||
                           vis[static_cast<size_t>(j)].best(i) > kVisibilityThreshold;
      if (related) edges.push_back(make_edge(i, j));
    }
  }
  return edges;
}

RelationGraph BuildGraph(const Scene& scene, const Catalog& catalog) {
  RelationGraph g;
  g.grid_w = scene.grid_w;
  g.grid_h = scene.grid_h;
  g.nodes = MergeNodes(scene, catalog);
  g.edges = ExtractEdges(g.nodes, DistanceScale(scene.grid_w));
  const int n = g.size();
  g.adjacency.assign(static_cast<size_t>(n) * n, 0);
  for (const auto& e : g.edges) {
    g.adjacency[static_cast<size_t>(e.src) * n + e.dst] = e.type_index();
  }
  return g;
}

std::vector<int> EdgeClassesToNewBox(std::span<const RelationNode> nodes,
                                     const OBB& box, Orientation orientation,
                                     double distance_scale) {
  std::vector<RelationNode> all(nodes.begin(), nodes.end());
  RelationNode extra;
  extra.node_id = static_cast<int>(all.size());
  extra.merged_obb = box;
  extra.orientation = orientation;
  all.push_back(extra);
  const int n = static_cast<int>(nodes.size());
  std::vector<int> classes(nodes.size(), 0);
  for (const auto& e : ExtractEdges(all, distance_scale)) {
    if (e.dst == n) classes[static_cast<size_t>(e.src)] = e.type_index();
  }
  return classes;
}

std::vector<float> OneHotAdjacency(const RelationGraph& graph) {
  const size_t n = static_cast<size_t>(graph.size());
  std::vector<float> out(n * kNumEdgeClasses * n, 0.0f);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      const size_t c = static_cast<size_t>(graph.A(static_cast<int>(i), static_cast<int>(j)));
      out[(i * kNumEdgeClasses + c) * n + j] = 1.0f;
    }
  }
  return out;
}

std::vector<double> NodeLabelOneHot(const RelationNode& node, int num_categories) {
  std::vector<double> out(static_cast<size_t>(num_categories), 0.0);
  if (node.category_id >= 0 && node.category_id < num_categories) {
    out[static_cast<size_t>(node.category_id)] = 1.0;
  }
  return out;
}

std::array<double, 4> NodeBoxAttribute(const RelationNode& node) {
  const OBB& b = node.merged_obb;
  return {static_cast<double>(b.x), static_cast<double>(b.y),
          static_cast<double>(b.w), static_cast<double>(b.h)};
}

nlohmann::json GraphToJson(const RelationGraph& graph) {
  using nlohmann::json;
  json nodes = json::array();
  for (const auto& n : graph.nodes) {
    const OBB& b = n.merged_obb;
    nodes.push_back({{"id", n.node_id},
                     {"members", n.member_unit_ids},
                     {"category", n.category_id},
                     {"orientation", Degrees(n.orientation)},
                     {"obb", {b.x, b.y, b.w, b.h}}});
  }
  json edges = json::array();
  json triplets = json::array();
  for (const auto& e : graph.edges) {
    std::vector<int> bits(e.alignment.begin(), e.alignment.end());
    edges.push_back({{"src", e.src},
                     {"dst", e.dst},
                     {"direction", DirectionName(e.direction)},
                     {"distance_bin", DistanceBinName(e.bin)},
                     {"type", e.type_index()},
                     {"distance", e.distance},
                     {"alignment", bits}});
    triplets.push_back({e.src, e.dst, e.type_index()});
  }
  return {{"format", "siteplan.graph"},
          {"version", 1},
          {"grid", {{"width", graph.grid_w}, {"height", graph.grid_h}}},
          {"nodes", nodes},
          {"edges", edges},
          {"adjacency", {{"size", graph.size()}, {"triplets", triplets}}}};
}

RelationGraph GraphFromJson(const nlohmann::json& doc) {
  RelationGraph g;
  try {
    if (doc.at("format").get<std::string>() != "siteplan.graph") {
      Fail(ErrorCode::kParse, "not a graph document");
    }
    g.grid_w = doc.at("grid").at("width").get<int>();
    g.grid_h = doc.at("grid").at("height").get<int>();
    for (const auto& n : doc.at("nodes")) {
      RelationNode node;
      node.node_id = n.at("id").get<int>();
      node.member_unit_ids = n.at("members").get<std::vector<int>>();
      node.category_id = n.at("category").get<int>();
      node.orientation = OrientationFromDegrees(n.at("orientation").get<int>());
      const auto box = n.at("obb").get<std::vector<int>>();
      if (box.size() != 4) Fail(ErrorCode::kParse, "obb must have 4 entries");
      node.merged_obb = OBB{box[0], box[1], box[2], box[3]};
      g.nodes.push_back(std::move(node));
    }
    for (const auto& e : doc.at("edges")) {
      RelationEdge edge;
      edge.src = e.at("src").get<int>();
      edge.dst = e.at("dst").get<int>();
      edge.direction = ParseDirection(e.at("direction").get<std::string>());
      edge.bin = ParseDistanceBin(e.at("distance_bin").get<std::string>());
      edge.distance = e.at("distance").get<double>();
      const auto bits = e.at("alignment").get<std::vector<int>>();
      if (bits.size() != kNumAlignmentBits) {
        Fail(ErrorCode::kParse, "alignment must have 6 entries");
      }
      for (size_t k = 0; k < bits.size(); ++k) edge.alignment[k] = bits[k] != 0;
      g.edges.push_back(edge);
    }
    const int n = doc.at("adjacency").at("size").get<int>();
    if (n != g.size()) Fail(ErrorCode::kParse, "adjacency size disagrees with nodes");
    g.adjacency.assign(static_cast<size_t>(n) * n, 0);
    for (const auto& t : doc.at("adjacency").at("triplets")) {
      const int i = t.at(0).get<int>();
      const int j = t.at(1).get<int>();
      const int type = t.at(2).get<int>();
      if (i < 0 || j < 0 || i >= n || j >= n || type < 1 || type > kNumEdgeTypes) {
        Fail(ErrorCode::kParse, "adjacency triplet out of range");
      }
      g.adjacency[static_cast<size_t>(i) * n + j] = type;
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, std::string("malformed graph document: ") + e.what());
  }
  return g;
}

}  // namespace siteplan
