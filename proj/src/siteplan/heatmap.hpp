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

// Location heatmaps decoded from edges to a new unit. Every edge places a
// target-sized footprint off one side of its source node; the footprints
// share unit mass evenly and the sum is scaled to a peak of 1.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "siteplan/graph.hpp"
#include "siteplan/render.hpp"
#include "siteplan/scene.hpp"

namespace siteplan {

// Full-scale target footprint side, scaled with the grid width.
inline constexpr double kFullScaleTargetSize = 24.0;
int DefaultTargetSize(int grid_w);

// Point estimate of the gap for a predicted bin: 0, 15, 55 or 105 full-scale
// grid units times the distance scale.
double RepresentativeDistance(DistanceBin bin, double scale);

struct HeatmapEdge {
  OBB source;
  Orientation orientation = Orientation::k0;
  Direction direction = Direction::kFront;
  double distance = 0.0;
};

// Real-valued rectangle [x0, x1) x [y0, y1) after clipping to the grid.
struct Footprint {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool empty = true;

  double area() const { return empty ? 0.0 : (x1 - x0) * (y1 - y0); }
};

// Target rectangle outside the source side named by the edge direction (in
// the source frame), its near side at the edge distance and its lateral
// center on the side's center.
Footprint EdgeToFootprint(const HeatmapEdge& edge, int target_w, int target_h, int grid_w,
                          int grid_h);

struct Heatmap {
  int width = 0;
  int height = 0;
  std::vector<double> values;  // row-major, index y * width + x

  double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
  double& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
  double max() const;
  double sum() const;
  bool all_zero() const { return max() <= 0.0; }
  // Peak cell, lowest row-major index on ties.
  std::pair<int, int> peak() const;
};

struct DecodedHeatmap {
  Heatmap map;            // normalized to peak 1 unless all zero
  double raw_mass = 0.0;  // deposited mass before normalization
  int empty_footprints = 0;
  bool all_empty = false;
};

// Each footprint cell receives 1 / |edges| times its covered fraction.
DecodedHeatmap EdgesToHeatmap(std::span<const HeatmapEdge> edges, int grid_w, int grid_h,
                              int target_w, int target_h);

// Cells <= 0.5 dropped, 5x5 Gaussian (sigma 1, zero outside the grid),
// rescaled to peak 1.
Heatmap Postprocess(const Heatmap& normalized);

// Heatmap edges of a graph: predicted edges use representative distances,
// ground-truth classes use the exact gap to the target box.
std::vector<HeatmapEdge> PredictedHeatmapEdges(const RelationGraph& graph,
                                               std::span<const int> node,
                                               std::span<const int> edge_type);
std::vector<HeatmapEdge> TruthHeatmapEdges(const RelationGraph& graph,
                                           std::span<const int> target_classes,
                                           const OBB& target_box);

// Float grid file (one channel) and an 8-bit overlay: heatmap blended in red
// over the rendered scene, one pixel per grid cell, +y up.
void WriteHeatmap(const Heatmap& map, const std::filesystem::path& path);
Heatmap ReadHeatmap(const std::filesystem::path& path);
void WriteOverlay(const Heatmap& map, const Scene& scene, const Catalog& catalog,
                  const std::filesystem::path& path);

// Little-endian float32 row-major bytes, base64 encoded.
std::string EncodeHeatmapPayload(const Heatmap& map);
Heatmap DecodeHeatmapPayload(const std::string& payload, int width, int height);

}  // namespace siteplan
