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

// Float-grid files ("FGRID1" header, then channel-major little-endian
// float32) and 8-bit PGM/PPM exports for inspection.

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace siteplan {

struct FloatGrid {
  int channels = 1;
  int width = 0;
  int height = 0;
  std::vector<float> data;  // [channel][row][col]

  float at(int c, int x, int y) const {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
};

void WriteFloatGrid(const FloatGrid& grid, const std::filesystem::path& path);
FloatGrid ReadFloatGrid(const std::filesystem::path& path);

// Row 0 of the grid is written as the bottom image row so +y points up.
void WritePgm(const std::vector<float>& values, int width, int height,
              const std::filesystem::path& path);
void WritePpm(const std::vector<std::uint8_t>& rgb, int width, int height,
              const std::filesystem::path& path);

}  // namespace siteplan
