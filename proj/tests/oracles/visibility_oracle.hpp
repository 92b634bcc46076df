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

// Test-only brute-force relation oracle. Rays every 0.25 grid units are
// marched in 0.25 steps with point-in-box tests; no analytic entry distances
// and no code shared with the library's extractor.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include "siteplan/graph.hpp"
#include "siteplan/scene.hpp"

namespace oracle {

struct Box {
  int x, y, w, h;
  int quarter;  // heading in quarter turns from +x
};

inline bool Inside(const Box& b, double px, double py) {
  return px >= b.x && px < b.x + b.w && py >= b.y && py < b.y + b.h;
}

// fraction[side][other], sides in world quarter order +x, +y, -x, -y.
inline std::array<std::map<int, double>, 4> DenseVisibility(
    const std::vector<Box>& boxes, int self, int grid_w, int grid_h) {
  constexpr double kStep = 0.25;
  std::array<std::map<int, double>, 4> out;
  const Box& s = boxes[static_cast<size_t>(self)];
  for (int q = 0; q < 4; ++q) {
    const bool along_x = q % 2 == 0;
    const int len = along_x ? s.h : s.w;
    const int rays = static_cast<int>(len / kStep);
    std::map<int, int> hits;
    for (int r = 0; r < rays; ++r) {
      const double lateral = (along_x ? s.y : s.x) + kStep * (r + 0.5);
      double ox, oy, dx = 0, dy = 0;
      switch (q) {
        case 0: ox = s.x + s.w; oy = lateral; dx = 1; break;
        case 1: ox = lateral; oy = s.y + s.h; dy = 1; break;
        case 2: ox = s.x; oy = lateral; dx = -1; break;
        default: ox = lateral; oy = s.y; dy = -1; break;
      }
      for (double t = kStep / 2; t < grid_w + grid_h; t += kStep) {
        const double px = ox + dx * t;
        const double py = oy + dy * t;
        if (px < -1 || py < -1 || px > grid_w + 1 || py > grid_h + 1) break;
        int hit = -1;
        for (size_t k = 0; k < boxes.size(); ++k) {
          if (static_cast<int>(k) == self) continue;
          if (Inside(boxes[k], px, py)) {
            hit = static_cast<int>(k);
            break;
          }
        }
        if (hit >= 0) {
          ++hits[hit];
          break;
        }
      }
    }
    for (auto [id, c] : hits) out[static_cast<size_t>(q)][id] = static_cast<double>(c) / rays;
  }
  return out;
}

inline double GapDistance(const Box& a, const Box& b) {
  const double dx = std::max({0, a.x - (b.x + b.w), b.x - (a.x + a.w)});
  const double dy = std::max({0, a.y - (b.y + b.h), b.y - (a.y + a.h)});
  return std::hypot(dx, dy);
}

// Direction index (front 0, back 1, right 2, left 3) of a world quarter for a
// box with the given heading.
inline int DirOfQuarter(int heading, int world_q) {
  const int offset = ((world_q - heading) % 4 + 4) % 4;
  constexpr int kDir[] = {0, 3, 1, 2};  // front, left, back, right
  return kDir[offset];
}

inline int FallbackDir(const Box& from, const Box& to) {
  const double vx = (to.x + to.w / 2.0) - (from.x + from.w / 2.0);
  const double vy = (to.y + to.h / 2.0) - (from.y + from.h / 2.0);
  const double hx[] = {1, 0, -1, 0};
  const double hy[] = {0, 1, 0, -1};
  const double f = vx * hx[from.quarter] + vy * hy[from.quarter];
  const double l = vx * hx[(from.quarter + 1) % 4] + vy * hy[(from.quarter + 1) % 4];
  if (std::abs(f) >= std::abs(l)) return f >= 0 ? 0 : 1;
  return l > 0 ? 3 : 2;
}

inline int Bin(double d, double scale) {
  if (d == 0) return 0;
  if (d <= 30 * scale) return 1;
  if (d <= 80 * scale) return 2;
  return 3;
}

// (src, dst, 1-based type) triples.
inline std::set<std::tuple<int, int, int>> EdgeSet(const std::vector<Box>& boxes,
                                                   int grid_w, int grid_h) {
  const int n = static_cast<int>(boxes.size());
  const double scale = grid_w / 165.0;
  std::vector<std::array<double, 4>> dir_frac(static_cast<size_t>(n * n), {0, 0, 0, 0});
  for (int i = 0; i < n; ++i) {
    const auto vis = DenseVisibility(boxes, i, grid_w, grid_h);
    for (int q = 0; q < 4; ++q) {
      for (auto [j, f] : vis[static_cast<size_t>(q)]) {
        dir_frac[static_cast<size_t>(i * n + j)]
                [static_cast<size_t>(DirOfQuarter(boxes[static_cast<size_t>(i)].quarter, q))] = f;
      }
    }
  }
  auto best = [&](int i, int j) {
    const auto& f = dir_frac[static_cast<size_t>(i * n + j)];
    return *std::max_element(f.begin(), f.end());
  };
  auto dir = [&](int i, int j) {
    const auto& f = dir_frac[static_cast<size_t>(i * n + j)];
    int arg = 0;
    for (int d = 1; d < 4; ++d) {
      if (f[static_cast<size_t>(d)] > f[static_cast<size_t>(arg)]) arg = d;
    }
    if (f[static_cast<size_t>(arg)] > 0) return arg;
    return FallbackDir(boxes[static_cast<size_t>(i)], boxes[static_cast<size_t>(j)]);
  };
  std::set<std::tuple<int, int, int>> out;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (best(i, j) > 0.15 || best(j, i) > 0.15) {
        const int bin = Bin(GapDistance(boxes[static_cast<size_t>(i)], boxes[static_cast<size_t>(j)]), scale);
        out.insert({i, j, 1 + dir(i, j) * 4 + bin});
      }
    }
  }
  return out;
}

inline std::vector<Box> BoxesOf(const siteplan::RelationGraph& g) {
  std::vector<Box> boxes;
  for (const auto& n : g.nodes) {
    boxes.push_back({n.merged_obb.x, n.merged_obb.y, n.merged_obb.w, n.merged_obb.h,
                     siteplan::Degrees(n.orientation) / 90});
  }
  return boxes;
}

inline std::set<std::tuple<int, int, int>> EdgeSetOf(const siteplan::RelationGraph& g) {
  std::set<std::tuple<int, int, int>> out;
  for (const auto& e : g.edges) out.insert({e.src, e.dst, e.type_index()});
  return out;
}

// Random valid scene with up to `max_units` units on a small grid so that
// units interact at every distance bin.
inline siteplan::Scene RandomSmallScene(std::mt19937_64& rng, const siteplan::Catalog& catalog,
                                        int max_units, int grid = 64) {
  siteplan::Scene scene = siteplan::Scene::Empty(grid, grid, catalog);
  std::uniform_int_distribution<int> count_dist(1, max_units);
  std::uniform_int_distribution<int> pos(0, grid - 1);
  std::uniform_int_distribution<int> ext(1, 14);
  std::uniform_int_distribution<int> quarter(0, 3);
  const auto placeable = [&] {
    std::vector<int> c;
    for (const auto& e : catalog.entries()) {
      if (e.kind != siteplan::UnitKind::kForbidden) c.push_back(e.category_id);
    }
    return c;
  }();
  std::uniform_int_distribution<size_t> cat(0, placeable.size() - 1);
  const int target = count_dist(rng);
  for (int tries = 0; tries < 400 && static_cast<int>(scene.units.size()) < target; ++tries) {
    siteplan::OBB box{pos(rng), pos(rng), ext(rng), ext(rng)};
    if (!scene.InBounds(box)) continue;
    bool clash = false;
    for (const auto& u : scene.units) clash = clash || siteplan::Overlaps(u.obb, box);
    if (clash) continue;
    scene.units.push_back({static_cast<int>(scene.units.size()), placeable[cat(rng)], box,
                           siteplan::OrientationFromDegrees(90 * quarter(rng))});
  }
  return scene;
}

}  // namespace oracle
