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

#include "siteplan/heatmap.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>

#include "siteplan/error.hpp"
#include "siteplan/image_io.hpp"

namespace siteplan {

int DefaultTargetSize(int grid_w) {
  return std::max(1, static_cast<int>(std::lround(kFullScaleTargetSize * DistanceScale(grid_w))));
}

double RepresentativeDistance(DistanceBin bin, double scale) {
  constexpr std::array<double, 4> kFullScale{0.0, 15.0, 55.0, 105.0};
  return kFullScale[static_cast<size_t>(bin)] * scale;
}

Footprint EdgeToFootprint(const HeatmapEdge& edge, int target_w, int target_h, int grid_w,
                          int grid_h) {
  if (target_w <= 0 || target_h <= 0) Fail(ErrorCode::kInvalidArgument, "target size must be positive");
  if (edge.distance < 0 || !std::isfinite(edge.distance)) {
    Fail(ErrorCode::kInvalidArgument, "edge distance must be finite and non-negative");
  }
  const OBB& s = edge.source;
  const double d = edge.distance;
  Footprint f;
  switch (ToWorldSide(edge.orientation, edge.direction)) {
    case WorldSide::kPosX:
      f.x0 = s.right() + d;
      f.x1 = f.x0 + target_w;
      f.y0 = s.center_y() - target_h / 2.0;
      f.y1 = f.y0 + target_h;
      break;
    case WorldSide::kNegX:
      f.x1 = s.x - d;
      f.x0 = f.x1 - target_w;
      f.y0 = s.center_y() - target_h / 2.0;
      f.y1 = f.y0 + target_h;
      break;
    case WorldSide::kPosY:
      f.y0 = s.top() + d;
      f.y1 = f.y0 + target_h;
      f.x0 = s.center_x() - target_w / 2.0;
      f.x1 = f.x0 + target_w;
      break;
    case WorldSide::kNegY:
      f.y1 = s.y - d;
      f.y0 = f.y1 - target_h;
      f.x0 = s.center_x() - target_w / 2.0;
      f.x1 = f.x0 + target_w;
      break;
  }
  f.x0 = std::max(f.x0, 0.0);
  f.y0 = std::max(f.y0, 0.0);
  f.x1 = std::min(f.x1, static_cast<double>(grid_w));
  f.y1 = std::min(f.y1, static_cast<double>(grid_h));
  f.empty = !(f.x1 > f.x0 && f.y1 > f.y0);
  if (f.empty) f = Footprint{};
  return f;
}

double Heatmap::max() const {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

double Heatmap::sum() const {
  double s = 0;
  for (double v : values) s += v;
  return s;
}

std::pair<int, int> Heatmap::peak() const {
  const auto it = std::max_element(values.begin(), values.end());
  const int idx = static_cast<int>(it - values.begin());
  return {idx % width, idx / width};
}

DecodedHeatmap EdgesToHeatmap(std::span<const HeatmapEdge> edges, int grid_w, int grid_h,
                              int target_w, int target_h) {
  if (grid_w <= 0 || grid_h <= 0) Fail(ErrorCode::kInvalidArgument, "grid must be non-empty");
  DecodedHeatmap out;
  out.map.width = grid_w;
  out.map.height = grid_h;
  out.map.values.assign(static_cast<size_t>(grid_w) * grid_h, 0.0);
  if (edges.empty()) {
    out.all_empty = true;
    return out;
  }
  const double share = 1.0 / static_cast<double>(edges.size());
  for (const auto& e : edges) {
    const Footprint f = EdgeToFootprint(e, target_w, target_h, grid_w, grid_h);
    if (f.empty) {
      ++out.empty_footprints;
      continue;
    }
    const int cx0 = static_cast<int>(std::floor(f.x0));
    const int cy0 = static_cast<int>(std::floor(f.y0));
    const int cx1 = static_cast<int>(std::ceil(f.x1));
    const int cy1 = static_cast<int>(std::ceil(f.y1));
    for (int y = cy0; y < cy1; ++y) {
      const double cover_y = std::min<double>(f.y1, y + 1) - std::max<double>(f.y0, y);
      for (int x = cx0; x < cx1; ++x) {
        const double cover_x = std::min<double>(f.x1, x + 1) - std::max<double>(f.x0, x);
        const double w = cover_x * cover_y;
        if (w > 0) out.map.at(x, y) += share * w;
      }
    }
  }
  out.raw_mass = out.map.sum();
  out.all_empty = out.empty_footprints == static_cast<int>(edges.size());
  const double peak = out.map.max();
  if (peak > 0) {
    for (double& v : out.map.values) v /= peak;
  }
  return out;
}

Heatmap Postprocess(const Heatmap& normalized) {
  std::array<double, 5> g{};
  double total = 0;
  for (int k = -2; k <= 2; ++k) {
    g[static_cast<size_t>(k + 2)] = std::exp(-0.5 * k * k);
    total += g[static_cast<size_t>(k + 2)];
  }
  for (double& v : g) v /= total;
  Heatmap kept = normalized;
  for (double& v : kept.values) {
    if (v <= 0.5) v = 0.0;
  }
  // Separable blur, zero outside the grid.
  Heatmap rows = kept;
  for (int y = 0; y < kept.height; ++y) {
    for (int x = 0; x < kept.width; ++x) {
      double acc = 0;
      for (int k = -2; k <= 2; ++k) {
        const int xx = x + k;
        if (xx >= 0 && xx < kept.width) acc += g[static_cast<size_t>(k + 2)] * kept.at(xx, y);
      }
      rows.at(x, y) = acc;
    }
  }
  Heatmap out = rows;
  for (int y = 0; y < kept.height; ++y) {
    for (int x = 0; x < kept.width; ++x) {
      double acc = 0;
      for (int k = -2; k <= 2; ++k) {
        const int yy = y + k;
        if (yy >= 0 && yy < kept.height) acc += g[static_cast<size_t>(k + 2)] * rows.at(x, yy);
      }
      out.at(x, y) = acc;
    }
  }
  const double peak = out.max();
  if (peak > 0) {
    for (double& v : out.values) v /= peak;
  }
  return out;
}

std::vector<HeatmapEdge> PredictedHeatmapEdges(const RelationGraph& graph,
                                               std::span<const int> node,
                                               std::span<const int> edge_type) {
  if (node.size() != edge_type.size()) Fail(ErrorCode::kInvalidArgument, "edge list length mismatch");
  const double scale = DistanceScale(graph.grid_w);
  std::vector<HeatmapEdge> out;
  for (size_t k = 0; k < node.size(); ++k) {
    const int j = node[k];
    const int t = edge_type[k];
    if (j < 0 || j >= graph.size() || t < 1 || t > kNumEdgeTypes) {
      Fail(ErrorCode::kInvalidArgument, "predicted edge out of range");
    }
    const RelationNode& n = graph.nodes[static_cast<size_t>(j)];
    out.push_back({n.merged_obb, n.orientation, TypeDirection(t),
                   RepresentativeDistance(TypeBin(t), scale)});
  }
  return out;
}

std::vector<HeatmapEdge> TruthHeatmapEdges(const RelationGraph& graph,
                                           std::span<const int> target_classes,
                                           const OBB& target_box) {
  if (static_cast<int>(target_classes.size()) != graph.size()) {
    Fail(ErrorCode::kInvalidArgument, "target row length differs from node count");
  }
  std::vector<HeatmapEdge> out;
  for (int j = 0; j < graph.size(); ++j) {
    const int t = target_classes[static_cast<size_t>(j)];
    if (t == 0) continue;
    const RelationNode& n = graph.nodes[static_cast<size_t>(j)];
    out.push_back({n.merged_obb, n.orientation, TypeDirection(t), ObbDistance(n.merged_obb, target_box)});
  }
  return out;
}

void WriteHeatmap(const Heatmap& map, const std::filesystem::path& path) {
  FloatGrid grid;
  grid.width = map.width;
  grid.height = map.height;
  grid.data.assign(map.values.begin(), map.values.end());
  WriteFloatGrid(grid, path);
}

Heatmap ReadHeatmap(const std::filesystem::path& path) {
  const FloatGrid grid = ReadFloatGrid(path);
  if (grid.channels != 1) Fail(ErrorCode::kParse, path.string() + ": heatmap must have one channel");
  Heatmap map;
  map.width = grid.width;
  map.height = grid.height;
  map.values.assign(grid.data.begin(), grid.data.end());
  return map;
}

void WriteOverlay(const Heatmap& map, const Scene& scene, const Catalog& catalog,
                  const std::filesystem::path& path) {
  if (map.width != scene.grid_w || map.height != scene.grid_h) {
    Fail(ErrorCode::kInvalidArgument, "heatmap and scene grids differ");
  }
  std::vector<double> base(static_cast<size_t>(map.width) * map.height, 0.12);
  const double tallest = std::max(catalog.max_height(), 1e-9);
  for (const auto& u : scene.units) {
    const double shade = 0.3 + 0.6 * catalog.at(u.category_id).nominal_height / tallest;
    for (int y = u.obb.y; y < u.obb.top(); ++y) {
      for (int x = u.obb.x; x < u.obb.right(); ++x) base[static_cast<size_t>(y) * map.width + x] = shade;
    }
  }
  std::vector<std::uint8_t> rgb(static_cast<size_t>(map.width) * map.height * 3);
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      const size_t i = static_cast<size_t>(y) * map.width + x;
      std::array<double, 3> c{base[i], base[i], base[i]};
      if (scene.forbidden.at(x, y)) c = {0.15, 0.25, 0.65};
      const double a = std::clamp(map.values[i], 0.0, 1.0);
      c = {(1 - a) * c[0] + a, (1 - a) * c[1], (1 - a) * c[2]};
      for (int k = 0; k < 3; ++k) {
        rgb[i * 3 + static_cast<size_t>(k)] = static_cast<std::uint8_t>(std::lround(255 * c[static_cast<size_t>(k)]));
      }
    }
  }
  WritePpm(rgb, map.width, map.height, path);
}

std::string EncodeHeatmapPayload(const Heatmap& map) {
  std::vector<unsigned char> bytes(map.values.size() * 4);
  for (size_t i = 0; i < map.values.size(); ++i) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(map.values[i]));
    for (int k = 0; k < 4; ++k) bytes[i * 4 + static_cast<size_t>(k)] = static_cast<unsigned char>(bits >> (8 * k));
  }
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<size_t>(n));
  return out;
}

Heatmap DecodeHeatmapPayload(const std::string& payload, int width, int height) {
  if (width <= 0 || height <= 0) Fail(ErrorCode::kInvalidArgument, "payload dims must be positive");
  const size_t expected = static_cast<size_t>(width) * height * 4;
  if (payload.size() != 4 * ((expected + 2) / 3)) {
    Fail(ErrorCode::kParse, "heatmap payload length does not match its dims");
  }
  std::vector<unsigned char> bytes(payload.size() / 4 * 3);
  if (EVP_DecodeBlock(bytes.data(), reinterpret_cast<const unsigned char*>(payload.data()),
                      static_cast<int>(payload.size())) < 0) {
    Fail(ErrorCode::kParse, "heatmap payload is not base64");
  }
  Heatmap map;
  map.width = width;
  map.height = height;
  map.values.resize(static_cast<size_t>(width) * height);
  for (size_t i = 0; i < map.values.size(); ++i) {
    std::uint32_t bits = 0;
    for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(bytes[i * 4 + static_cast<size_t>(k)]) << (8 * k);
    map.values[i] = std::bit_cast<float>(bits);
  }
  return map;
}

}  // namespace siteplan
