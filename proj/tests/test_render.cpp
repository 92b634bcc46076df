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

#include <algorithm>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "siteplan/error.hpp"
#include "siteplan/image_io.hpp"
#include "siteplan/render.hpp"
#include "siteplan/synth.hpp"

using namespace siteplan;

TEST_CASE("render_topdown examples") {
  const Catalog catalog = Catalog::DeskDefault();
  SUBCASE("empty scene") {
    const auto img = RenderTopdown(Scene::Empty(64, 64, catalog), catalog, 128);
    CHECK(img.depth.size() == 128u * 128u);
    CHECK(std::all_of(img.depth.begin(), img.depth.end(), [](float v) { return v == 0.0f; }));
    CHECK(std::all_of(img.mask.begin(), img.mask.end(), [](float v) { return v == 0.0f; }));
  }
  SUBCASE("full-scale grid letterboxed into 512") {
    const auto cfg = GeneratorConfig::FullScale();
    CHECK(cfg.grid_w == 165);
    CHECK(cfg.grid_h == 183);
    const auto img = RenderTopdown(Scene::Empty(165, 183, catalog), catalog, 512);
    CHECK(img.resolution == 512);
    CHECK(img.scale == doctest::Approx(512.0 / 183.0));
    const auto [x0, y0] = img.GridToPixel(0, 0);
    const auto [x1, y1] = img.GridToPixel(165, 183);
    CHECK(y0 == doctest::Approx(0.0));
    CHECK(y1 == doctest::Approx(512.0));
    CHECK(x0 == doctest::Approx(512.0 - x1));
  }
  SUBCASE("one max-height unit covering the grid") {
    Scene s = Scene::Empty(16, 16, catalog);
    s.units.push_back({1, 6, {0, 0, 16, 16}, Orientation::k0});
    const auto img = RenderTopdown(s, catalog, 64);
    CHECK(std::all_of(img.depth.begin(), img.depth.end(), [](float v) { return v == 1.0f; }));
  }
  CHECK_THROWS_AS(RenderTopdown(Scene::Empty(64, 64, catalog), catalog, 31), Error);
}

TEST_CASE("render pixel area tracks grid area") {
  const Catalog catalog = Catalog::DeskDefault();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto gen = GenerateScene(GeneratorConfig{}, catalog, seed);
    const auto img = RenderTopdown(gen.scene, catalog, 128);
    const auto again = RenderTopdown(gen.scene, catalog, 128);
    CHECK(img.depth == again.depth);
    CHECK(img.mask == again.mask);
    const double scale = img.scale;
    for (const auto& u : gen.scene.units) {
      const float h = static_cast<float>(catalog.at(u.category_id).nominal_height / catalog.max_height());
      int pixels = 0;
      const auto [px0, py0] = img.GridToPixel(u.obb.x, u.obb.y);
      const auto [px1, py1] = img.GridToPixel(u.obb.right(), u.obb.top());
      for (int py = static_cast<int>(py0); py < static_cast<int>(py1); ++py) {
        for (int px = static_cast<int>(px0); px < static_cast<int>(px1); ++px) {
          if (img.depth[static_cast<size_t>(py) * 128 + px] == h) ++pixels;
        }
      }
      const double expected = u.obb.area() * scale * scale;
      const double row = std::max(u.obb.w, u.obb.h) * scale;
      CHECK(std::abs(pixels - expected) <= row);
    }
    const int mask_px = static_cast<int>(std::accumulate(img.mask.begin(), img.mask.end(), 0.0f));
    CHECK(mask_px == doctest::Approx(gen.scene.forbidden.count() * scale * scale).epsilon(0.01));
  }
}

TEST_CASE("float grid files round trip") {
  const Catalog catalog = Catalog::DeskDefault();
  const auto gen = GenerateScene(GeneratorConfig{}, catalog, 3);
  const auto img = RenderTopdown(gen.scene, catalog, 64);
  const auto dir = std::filesystem::temp_directory_path() / "siteplan_test_render";
  WriteFloatGrid(img.ToFloatGrid(), dir / "img.fgrid");
  const auto back = SiteImage::FromFloatGrid(ReadFloatGrid(dir / "img.fgrid"), 64, 64);
  CHECK(back.depth == img.depth);
  CHECK(back.mask == img.mask);
  CHECK(back.scale == img.scale);
  WritePgm(img.depth, 64, 64, dir / "img.pgm");
  CHECK(std::filesystem::file_size(dir / "img.pgm") > 64u * 64u);
  CHECK_THROWS_AS(ReadFloatGrid(dir / "missing.fgrid"), Error);
  std::filesystem::remove_all(dir);
}
