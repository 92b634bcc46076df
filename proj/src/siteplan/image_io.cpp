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

#include "siteplan/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "siteplan/error.hpp"

namespace siteplan {

namespace {

static_assert(std::endian::native == std::endian::little,
              "float-grid I/O assumes a little-endian host");

std::ofstream OpenOut(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

}  // namespace

void WriteFloatGrid(const FloatGrid& grid, const std::filesystem::path& path) {
  const size_t expected =
      static_cast<size_t>(grid.channels) * grid.width * grid.height;
  if (grid.data.size() != expected) {
    Fail(ErrorCode::kInvalidArgument, "float grid data size mismatch");
  }
  auto out = OpenOut(path);
  out << "FGRID1\n" << grid.channels << ' ' << grid.width << ' ' << grid.height << '\n';
  out.write(reinterpret_cast<const char*>(grid.data.data()),
            static_cast<std::streamsize>(expected * sizeof(float)));
  if (!out) Fail(ErrorCode::kIo, "write failed for " + path.string());
}

FloatGrid ReadFloatGrid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  std::string magic;
  std::getline(in, magic);
  if (magic != "FGRID1") Fail(ErrorCode::kParse, path.string() + ": not a float grid");
  std::string dims;
  std::getline(in, dims);
  FloatGrid grid;
  std::istringstream ds(dims);
  if (!(ds >> grid.channels >> grid.width >> grid.height) || grid.channels <= 0 ||
      grid.width <= 0 || grid.height <= 0) {
    Fail(ErrorCode::kParse, path.string() + ": bad float grid header");
  }
  grid.data.resize(static_cast<size_t>(grid.channels) * grid.width * grid.height);
  in.read(reinterpret_cast<char*>(grid.data.data()),
          static_cast<std::streamsize>(grid.data.size() * sizeof(float)));
  if (!in) Fail(ErrorCode::kParse, path.string() + ": truncated float grid");
  return grid;
}

void WritePgm(const std::vector<float>& values, int width, int height,
              const std::filesystem::path& path) {
  auto out = OpenOut(path);
  out << "P5\n" << width << ' ' << height << "\n255\n";
  std::vector<unsigned char> row(static_cast<size_t>(width));
  for (int y = height - 1; y >= 0; --y) {
    for (int x = 0; x < width; ++x) {
      const float v = std::clamp(values[static_cast<size_t>(y) * width + x], 0.0f, 1.0f);
      row[static_cast<size_t>(x)] = static_cast<unsigned char>(v * 255.0f + 0.5f);
    }
    out.write(reinterpret_cast<const char*>(row.data()), width);
  }
  if (!out) Fail(ErrorCode::kIo, "write failed for " + path.string());
}

void WritePpm(const std::vector<std::uint8_t>& rgb, int width, int height,
              const std::filesystem::path& path) {
  if (rgb.size() != static_cast<size_t>(width) * height * 3) {
    Fail(ErrorCode::kInvalidArgument, "rgb buffer size mismatch");
  }
  auto out = OpenOut(path);
  out << "P6\n" << width << ' ' << height << "\n255\n";
  for (int y = height - 1; y >= 0; --y) {
    out.write(reinterpret_cast<const char*>(rgb.data() + static_cast<size_t>(y) * width * 3),
              width * 3);
  }
  if (!out) Fail(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace siteplan
