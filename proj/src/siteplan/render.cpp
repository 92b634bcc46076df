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

#include "siteplan/render.hpp"

#include <algorithm>
#include <cmath>

#include "siteplan/error.hpp"

namespace siteplan {

FloatGrid SiteImage::ToFloatGrid() const {
  FloatGrid g;
  g.channels = 2;
  g.width = resolution;
  g.height = resolution;
  g.data = depth;
  g.data.insert(g.data.end(), mask.begin(), mask.end());
  return g;
}

SiteImage SiteImage::FromFloatGrid(const FloatGrid& grid, int grid_w, int grid_h) {
  if (grid.channels != 2 || grid.width != grid.height) {
    Fail(ErrorCode::kParse, "site image must be a square 2-channel grid");
  }
  SiteImage img;
  img.resolution = grid.width;
  img.grid_w = grid_w;
  img.grid_h = grid_h;
  img.scale = static_cast<double>(grid.width) / std::max(grid_w, grid_h);
  const double span = grid.width / img.scale;
  img.offset_x = 0.5 * (span - grid_w);
  img.offset_y = 0.5 * (span - grid_h);
  const size_t plane = static_cast<size_t>(grid.width) * grid.height;
  img.depth.assign(grid.data.begin(), grid.data.begin() + static_cast<long>(plane));
  img.mask.assign(grid.data.begin() + static_cast<long>(plane), grid.data.end());
  return img;
}

SiteImage RenderTopdown(const Scene& scene, const Catalog& catalog, int resolution) {
  if (resolution < 32) {
    Fail(ErrorCode::kInvalidArgument, "render resolution must be at least 32");
  }
  SiteImage img;
  img.resolution = resolution;
  img.grid_w = scene.grid_w;
  img.grid_h = scene.grid_h;
  img.scale = static_cast<double>(resolution) / std::max(scene.grid_w, scene.grid_h);
  const double span = resolution / img.scale;
  img.offset_x = 0.5 * (span - scene.grid_w);
  img.offset_y = 0.5 * (span - scene.grid_h);

  // Cell raster of normalized heights; units never overlap.
  const double max_height = catalog.max_height();
  std::vector<float> cell_height(static_cast<size_t>(scene.grid_w) * scene.grid_h, 0.0f);
  for (const auto& u : scene.units) {
    const double h = max_height > 0 ? catalog.at(u.category_id).nominal_height / max_height : 0.0;
    for (int y = std::max(0, u.obb.y); y < std::min(scene.grid_h, u.obb.top()); ++y) {
      for (int x = std::max(0, u.obb.x); x < std::min(scene.grid_w, u.obb.right()); ++x) {
        cell_height[static_cast<size_t>(y) * scene.grid_w + x] = static_cast<float>(h);
      }
    }
  }

  const size_t plane = static_cast<size_t>(resolution) * resolution;
  img.depth.assign(plane, 0.0f);
  img.mask.assign(plane, 0.0f);
  const bool has_mask = scene.forbidden.width() == scene.grid_w &&
                        scene.forbidden.height() == scene.grid_h;
  for (int py = 0; py < resolution; ++py) {
    for (int px = 0; px < resolution; ++px) {
      const auto [gx, gy] = img.PixelToGrid(px + 0.5, py + 0.5);
      const int cx = static_cast<int>(std::floor(gx));
      const int cy = static_cast<int>(std::floor(gy));
      if (cx < 0 || cy < 0 || cx >= scene.grid_w || cy >= scene.grid_h) continue;
      const size_t p = static_cast<size_t>(py) * resolution + px;
      img.depth[p] = cell_height[static_cast<size_t>(cy) * scene.grid_w + cx];
      if (has_mask && scene.forbidden.at(cx, cy)) img.mask[p] = 1.0f;
    }
  }
  return img;
}

}  // namespace siteplan
