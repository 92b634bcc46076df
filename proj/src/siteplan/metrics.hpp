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

// Agreement between a reference and a predicted heatmap, and how much of a
// heatmap's mass lands where nothing may be placed.

#pragma once

#include "json.hpp"
#include "siteplan/heatmap.hpp"
#include "siteplan/scene.hpp"

namespace siteplan {

struct AreaScore {
  double recall = 0, precision = 0, f1 = 0;
  bool degenerate = false;  // an all-zero map
};

// Support overlap of the two maps (cells > 0).
AreaScore F1Area(const Heatmap& reference, const Heatmap& predicted);
// Overlap of min(reference, predicted) on the shared support.
AreaScore F1Prob(const Heatmap& reference, const Heatmap& predicted);

struct Validity {
  double forbidden_overlap = 0;
  double collision_overlap = 0;
  bool degenerate = false;
};

// Mass fractions on forbidden cells and on existing unit footprints.
Validity PlacementValidity(const Heatmap& map, const Scene& scene);

struct ScoreRow {
  double ar = 0, ap = 0, pr = 0, pp = 0, f1s_a = 0, f1s_p = 0;
  double forbidden_overlap = 0, collision_overlap = 0;
};

ScoreRow ScoreHeatmaps(const Heatmap& reference, const Heatmap& predicted, const Scene& scene);
ScoreRow MeanRow(const std::vector<ScoreRow>& rows);
nlohmann::json ScoreRowToJson(const ScoreRow& row);

}  // namespace siteplan
