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

#pragma once

#include <utility>
#include <vector>

#include "siteplan/image_io.hpp"
#include "siteplan/scene.hpp"

namespace siteplan {

inline constexpr int kDeskResolution = 128;
inline constexpr int kFullScaleResolution = 512;

// Top-down orthographic render. Channel 0 holds unit heights normalized by
// the tallest catalog entry, channel 1 the forbidden mask. The grid is scaled
// uniformly to fit and centered (letterboxed) along the shorter axis.
struct SiteImage {
  int resolution = 0;
  int grid_w = 0;
  int grid_h = 0;
  double scale = 1.0;     // pixels per grid unit
  double offset_x = 0.0;  // letterbox margin, grid units
  double offset_y = 0.0;
  std::vector<float> depth;  // resolution x resolution, row = pixel y
  std::vector<float> mask;

  std::pair<double, double> PixelToGrid(double px, double py) const {
    return {px / scale - offset_x, py / scale - offset_y};
  }
  std::pair<double, double> GridToPixel(double gx, double gy) const {
    return {(gx + offset_x) * scale, (gy + offset_y) * scale};
  }

  FloatGrid ToFloatGrid() const;
  static SiteImage FromFloatGrid(const FloatGrid& grid, int grid_w, int grid_h);
};

// Throws kInvalidArgument when resolution < 32.
SiteImage RenderTopdown(const Scene& scene, const Catalog& catalog, int resolution);

}  // namespace siteplan
