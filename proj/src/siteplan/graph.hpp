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

// Relation graph extraction.
//
// Nodes are units, with touching collinear infrastructure runs merged. Edges
// come from raycasting the four sides of every node box: j is related to i
// when more than 15% of the rays leaving one side of i hit j first. Every
// detected edge gets a partner in the opposite direction with the same
// distance, its direction re-derived in the partner's own frame.

#pragma once

#include <array>
#include <map>
#include <span>
#include <vector>

#include "json.hpp"
#include "siteplan/scene.hpp"

namespace siteplan {

enum class Direction { kFront = 0, kBack = 1, kRight = 2, kLeft = 3 };

// Outward world axes of a box side.
enum class WorldSide { kPosX = 0, kNegX = 1, kPosY = 2, kNegY = 3 };

const char* DirectionName(Direction d);
Direction ParseDirection(const std::string& name);
DistanceBin ParseDistanceBin(const std::string& name);

// Orientation is a counter-clockwise heading from +x; front points along it.
WorldSide ToWorldSide(Orientation o, Direction d);
Direction ToDirection(Orientation o, WorldSide s);

inline constexpr int kNumDirections = 4;
inline constexpr int kNumEdgeTypes = 16;
inline constexpr int kNumEdgeClasses = kNumEdgeTypes + 1;  // + no-edge
inline constexpr int kNumAlignmentBits = 6;
inline constexpr double kVisibilityThreshold = 0.15;
inline constexpr double kAlignTolerance = 0.5;

// 1-based edge type used in the adjacency matrix; 0 means no edge.
inline int EdgeTypeIndex(Direction d, DistanceBin b) {
  return 1 + static_cast<int>(d) * 4 + static_cast<int>(b);
}
inline Direction TypeDirection(int type_index) {
  return static_cast<Direction>((type_index - 1) / 4);
}
inline DistanceBin TypeBin(int type_index) {
  return static_cast<DistanceBin>((type_index - 1) % 4);
}

struct Occluder {
  int id = 0;
  OBB box;
};

// Visible fraction of every hit occluder, per world side of `source`. Rays
// are spaced one grid unit apart, offset half a unit from the side ends.
using WorldVisibility = std::array<std::map<int, double>, 4>;
WorldVisibility CastFromBox(const OBB& source, int source_id,
                            std::span<const Occluder> occluders);

// Per-side visibility of the other scene units, indexed by Direction in the
// unit's own frame.
using SideVisibility = std::array<std::map<int, double>, 4>;
SideVisibility RaycastVisibility(const Scene& scene, const Unit& unit);

struct RelationNode {
  int node_id = 0;
  std::vector<int> member_unit_ids;
  OBB merged_obb;
  int category_id = 0;
  Orientation orientation = Orientation::k0;
};

using AlignmentBits = std::array<bool, kNumAlignmentBits>;

struct RelationEdge {
  int src = 0;
  int dst = 0;
  Direction direction = Direction::kFront;
  DistanceBin bin = DistanceBin::kNextTo;
  double distance = 0.0;
  AlignmentBits alignment{};

  int type_index() const { return EdgeTypeIndex(direction, bin); }
};

struct RelationGraph {
  int grid_w = 0;
  int grid_h = 0;
  std::vector<RelationNode> nodes;
  std::vector<RelationEdge> edges;  // sorted by (src, dst)
  std::vector<int> adjacency;       // row-major n x n, values in [0, 16]

  int size() const { return static_cast<int>(nodes.size()); }
  int A(int i, int j) const { return adjacency[static_cast<size_t>(i) * size() + j]; }
  const RelationEdge* find_edge(int src, int dst) const;
};

// Bits: left side, vertical center, right side, top side, horizontal center,
// bottom side.
AlignmentBits AlignmentAttributes(const OBB& a, const OBB& b);

std::vector<RelationNode> MergeNodes(const Scene& scene, const Catalog& catalog);

// Edges among `nodes` (any order; node_id must equal the index).
std::vector<RelationEdge> ExtractEdges(std::span<const RelationNode> nodes,
                                       double distance_scale);

RelationGraph BuildGraph(const Scene& scene, const Catalog& catalog);

// Edge classes (0 = none, else type index) from each existing node to a box
// that is not yet part of the graph, computed as if it were appended.
std::vector<int> EdgeClassesToNewBox(std::span<const RelationNode> nodes,
                                     const OBB& box, Orientation orientation,
                                     double distance_scale);

// Dense channel layout of the one-hot adjacency: element [i][c][j].
std::vector<float> OneHotAdjacency(const RelationGraph& graph);

// Attribute vectors fed to the network.
std::vector<double> NodeLabelOneHot(const RelationNode& node, int num_categories);
std::array<double, 4> NodeBoxAttribute(const RelationNode& node);

nlohmann::json GraphToJson(const RelationGraph& graph);
RelationGraph GraphFromJson(const nlohmann::json& doc);

}  // namespace siteplan
