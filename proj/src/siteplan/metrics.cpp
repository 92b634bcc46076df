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

#include "siteplan/metrics.hpp"

#include <algorithm>

#include "siteplan/error.hpp"

namespace siteplan {

namespace {

void CheckShapes(const Heatmap& a, const Heatmap& b) {
  if (a.width != b.width || a.height != b.height) {
    Fail(ErrorCode::kInvalidArgument, "heatmaps differ in shape");
  }
}

double Harmonic(double p, double r) { return p > 0 && r > 0 ? 2.0 / (1.0 / p + 1.0 / r) : 0.0; }

}  // namespace

AreaScore F1Area(const Heatmap& reference, const Heatmap& predicted) {
  CheckShapes(reference, predicted);
  long ref = 0, pred = 0, both = 0;
  for (size_t i = 0; i < reference.values.size(); ++i) {
    const bool r = reference.values[i] > 0, p = predicted.values[i] > 0;
    ref += r;
    pred += p;
    both += r && p;
  }
  AreaScore s;
  if (ref == 0 || pred == 0) {
    s.degenerate = true;
    return s;
  }
  s.recall = static_cast<double>(both) / static_cast<double>(ref);
  s.precision = static_cast<double>(both) / static_cast<double>(pred);
  s.f1 = Harmonic(s.precision, s.recall);
  return s;
}

AreaScore F1Prob(const Heatmap& reference, const Heatmap& predicted) {
  CheckShapes(reference, predicted);
  double ref = 0, pred = 0, shared = 0;
  for (size_t i = 0; i < reference.values.size(); ++i) {
    const double r = reference.values[i], p = predicted.values[i];
    ref += r;
    pred += p;
    if (r > 0 && p > 0) shared += std::min(r, p);
  }
  AreaScore s;
  if (ref <= 0 || pred <= 0) {
    s.degenerate = true;
    return s;
  }
  s.recall = shared / ref;
  s.precision = shared / pred;
  s.f1 = Harmonic(s.precision, s.recall);
  return s;
}

Validity PlacementValidity(const Heatmap& map, const Scene& scene) {
  if (map.width != scene.grid_w || map.height != scene.grid_h) {
    Fail(ErrorCode::kInvalidArgument, "heatmap and scene grids differ");
  }
  std::vector<char> occupied(map.values.size(), 0);
  for (const auto& u : scene.units) {
    for (int y = u.obb.y; y < u.obb.top(); ++y) {
      for (int x = u.obb.x; x < u.obb.right(); ++x) occupied[static_cast<size_t>(y) * map.width + x] = 1;
    }
  }
  double total = 0, forbidden = 0, collision = 0;
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      const double v = map.at(x, y);
      total += v;
      if (scene.forbidden.at(x, y)) forbidden += v;
      if (occupied[static_cast<size_t>(y) * map.width + x]) collision += v;
    }
  }
  Validity out;
  if (total <= 0) {
    out.degenerate = true;
    return out;
  }
  out.forbidden_overlap = forbidden / total;
  out.collision_overlap = collision / total;
  return out;
}

ScoreRow ScoreHeatmaps(const Heatmap& reference, const Heatmap& predicted, const Scene& scene) {
  const AreaScore a = F1Area(reference, predicted);
  const AreaScore p = F1Prob(reference, predicted);
  const Validity v = PlacementValidity(predicted, scene);
  return ScoreRow{a.recall, a.precision, p.recall, p.precision, a.f1, p.f1,
                  v.forbidden_overlap, v.collision_overlap};
}

ScoreRow MeanRow(const std::vector<ScoreRow>& rows) {
  ScoreRow m;
  if (rows.empty()) return m;
  for (const auto& r : rows) {
    m.ar += r.ar;
    m.ap += r.ap;
    m.pr += r.pr;
    m.pp += r.pp;
    m.f1s_a += r.f1s_a;
    m.f1s_p += r.f1s_p;
    m.forbidden_overlap += r.forbidden_overlap;
    m.collision_overlap += r.collision_overlap;
  }
  const double n = static_cast<double>(rows.size());
  for (double* v : {&m.ar, &m.ap, &m.pr, &m.pp, &m.f1s_a, &m.f1s_p, &m.forbidden_overlap,
                    &m.collision_overlap}) {
    *v /= n;
  }
  return m;
}

nlohmann::json ScoreRowToJson(const ScoreRow& r) {
  return {{"ar", r.ar},     {"ap", r.ap},       {"pr", r.pr},
          {"pp", r.pp},     {"f1s_a", r.f1s_a}, {"f1s_p", r.f1s_p},
          {"forbidden_overlap", r.forbidden_overlap},
          {"collision_overlap", r.collision_overlap}};
}

}  // namespace siteplan
