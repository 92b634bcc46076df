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

// Scene data model: unit catalog, grid-snapped boxes, forbidden mask, and the
// box geometry shared by extraction, rendering and heatmap decoding.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace siteplan {

enum class UnitKind { kInfrastructure, kArchitectural, kForbidden };

const char* UnitKindName(UnitKind kind);
UnitKind ParseUnitKind(const std::string& name);

struct UnitCatalogEntry {
  int category_id = 0;
  std::string name;
  UnitKind kind = UnitKind::kInfrastructure;
  double nominal_height = 0.0;
  int default_w = 1;
  int default_h = 1;
};

class Catalog {
 public:
  Catalog() = default;
  Catalog(std::string name, std::vector<UnitCatalogEntry> entries);

  // 12 categories: 6 infrastructure, 5 architectural, 1 forbidden.
  static Catalog DeskDefault();

  const std::string& name() const { return name_; }
  const std::vector<UnitCatalogEntry>& entries() const { return entries_; }
  int size() const { return static_cast<int>(entries_.size()); }
  bool Contains(int category_id) const {
    return category_id >= 0 && category_id < size();
  }
  const UnitCatalogEntry& at(int category_id) const;
  double max_height() const;
  std::vector<int> CategoriesOfKind(UnitKind kind) const;

  // Hex FNV-1a over the canonical serialization; checkpoints pin this.
  std::string Hash() const;

 private:
  std::string name_;
  std::vector<UnitCatalogEntry> entries_;
};

enum class Orientation { k0 = 0, k90 = 90, k180 = 180, k270 = 270 };

Orientation OrientationFromDegrees(int degrees);
inline int Degrees(Orientation o) { return static_cast<int>(o); }

// Axis-realized box on the grid: [x, x+w) x [y, y+h). Orientation lives on
// the unit, not here.
struct OBB {
  int x = 0;
  int y = 0;
  int w = 1;
  int h = 1;

  int right() const { return x + w; }
  int top() const { return y + h; }
  long area() const { return static_cast<long>(w) * h; }
  double center_x() const { return x + 0.5 * w; }
  double center_y() const { return y + 0.5 * h; }

  friend bool operator==(const OBB&, const OBB&) = default;
};

bool Overlaps(const OBB& a, const OBB& b);
OBB Union(const OBB& a, const OBB& b);

struct Unit {
  int unit_id = 0;
  int category_id = 0;
  OBB obb;
  Orientation orientation = Orientation::k0;

  friend bool operator==(const Unit&, const Unit&) = default;
};

class ForbiddenMask {
 public:
  ForbiddenMask() = default;
  ForbiddenMask(int width, int height)
      : width_(width), height_(height),
        cells_(static_cast<size_t>(width) * height, 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool at(int x, int y) const {
    return cells_[static_cast<size_t>(y) * width_ + x] != 0;
  }
  void set(int x, int y, bool value) {
    cells_[static_cast<size_t>(y) * width_ + x] = value ? 1 : 0;
  }
  long count() const;
  bool any_in(const OBB& box) const;

  friend bool operator==(const ForbiddenMask&, const ForbiddenMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> cells_;
};

struct Scene {
  int grid_w = 64;
  int grid_h = 64;
  std::string catalog_name;
  std::string catalog_hash;
  std::vector<Unit> units;
  ForbiddenMask forbidden;

  static Scene Empty(int grid_w, int grid_h, const Catalog& catalog);

  const Unit* find(int unit_id) const;
  int next_unit_id() const;
  bool InBounds(const OBB& box) const {
    return box.x >= 0 && box.y >= 0 && box.right() <= grid_w &&
           box.top() <= grid_h;
  }

  friend bool operator==(const Scene&, const Scene&) = default;
};

enum class ViolationKind {
  kDuplicateId,
  kDegenerateBox,
  kOutOfBounds,
  kUnknownCategory,
  kForbiddenKindUnit,
  kOverlap,
  kForbiddenCell,
  kMaskShape,
};

const char* ViolationKindName(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::vector<int> unit_ids;
  std::vector<std::pair<int, int>> cells;  // (x, y), capped sample
  std::string message;
};

// Empty result iff every scene invariant holds. The catalog check is skipped
// when `catalog` is null.
std::vector<Violation> ValidateScene(const Scene& scene,
                                     const Catalog* catalog = nullptr);

// Minimum Euclidean gap between two boxes; 0 when touching or overlapping.
double ObbDistance(const OBB& a, const OBB& b);

enum class DistanceBin { kNextTo = 0, kAdjacent = 1, kProximal = 2, kDistant = 3 };

inline constexpr double kFullScaleGridW = 165.0;
inline constexpr double kFullScaleGridH = 183.0;
inline constexpr double kAdjacentLimit = 30.0;
inline constexpr double kProximalLimit = 80.0;

const char* DistanceBinName(DistanceBin bin);

// Threshold scale for a grid of the given width (1 at full scale).
inline double DistanceScale(int grid_w) { return grid_w / kFullScaleGridW; }

// next_to iff d == 0; adjacent (0, 30s]; proximal (30s, 80s]; distant beyond.
// Throws kInvalidArgument for negative or non-finite d.
DistanceBin ClassifyDistance(double d, double scale = 1.0);

// [lower, upper] of the bin at the given scale; `lower_open` tells whether
// the lower end is excluded. Distant has upper = +inf.
struct BinInterval {
  double lower;
  double upper;
  bool lower_open;
};
BinInterval BinBounds(DistanceBin bin, double scale = 1.0);

}  // namespace siteplan
