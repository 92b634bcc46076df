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

#include "siteplan/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "siteplan/error.hpp"
#include "siteplan/hash.hpp"

namespace siteplan {

const char* UnitKindName(UnitKind kind) {
  switch (kind) {
    case UnitKind::kInfrastructure:
      return "infrastructure";
    case UnitKind::kArchitectural:
      return "architectural";
    case UnitKind::kForbidden:
      return "forbidden";
  }
  return "?";
}

UnitKind ParseUnitKind(const std::string& name) {
  if (name == "infrastructure") return UnitKind::kInfrastructure;
  if (name == "architectural") return UnitKind::kArchitectural;
  if (name == "forbidden") return UnitKind::kForbidden;
  Fail(ErrorCode::kParse, "unknown unit kind '" + name + "'");
}

Catalog::Catalog(std::string name, std::vector<UnitCatalogEntry> entries)
    : name_(std::move(name)), entries_(std::move(entries)) {
  int forbidden = 0;
  for (size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].category_id != static_cast<int>(i)) {
      Fail(ErrorCode::kInvalidArgument,
           "catalog category ids must be dense and ordered");
    }
    if (entries_[i].kind == UnitKind::kForbidden) ++forbidden;
  }
  if (forbidden > 1) {
    Fail(ErrorCode::kInvalidArgument, "catalog has more than one forbidden kind");
  }
}

Catalog Catalog::DeskDefault() {
  using K = UnitKind;
  return Catalog("desk-12", {
                                {0, "fence", K::kInfrastructure, 1.0, 4, 1},
                                {1, "hedge", K::kInfrastructure, 0.8, 4, 1},
                                {2, "path", K::kInfrastructure, 0.1, 2, 3},
                                {3, "lamp", K::kInfrastructure, 2.5, 1, 1},
                                {4, "bench", K::kInfrastructure, 0.5, 2, 1},
                                {5, "wall", K::kInfrastructure, 2.0, 4, 1},
                                {6, "house", K::kArchitectural, 6.0, 8, 8},
                                {7, "greenhouse", K::kArchitectural, 3.5, 8, 6},
                                {8, "shed", K::kArchitectural, 3.0, 5, 5},
                                {9, "gazebo", K::kArchitectural, 4.0, 6, 6},
                                {10, "garage", K::kArchitectural, 3.0, 8, 6},
                                {11, "pool", K::kForbidden, 0.0, 1, 1},
                            });
}

const UnitCatalogEntry& Catalog::at(int category_id) const {
  if (!Contains(category_id)) {
    Fail(ErrorCode::kInvalidArgument,
         "unknown category id " + std::to_string(category_id));
  }
  return entries_[static_cast<size_t>(category_id)];
}

double Catalog::max_height() const {
  double best = 0.0;
  for (const auto& e : entries_) best = std::max(best, e.nominal_height);
  return best;
}

std::vector<int> Catalog::CategoriesOfKind(UnitKind kind) const {
  std::vector<int> out;
  for (const auto& e : entries_) {
    if (e.kind == kind) out.push_back(e.category_id);
  }
  return out;
}

std::string Catalog::Hash() const {
  std::ostringstream os;
  os << name_ << '\n';
  for (const auto& e : entries_) {
    char height[64];
    std::snprintf(height, sizeof(height), "%.17g", e.nominal_height);
    os << e.category_id << '|' << e.name << '|' << UnitKindName(e.kind) << '|'
       << height << '|' << e.default_w << 'x' << e.default_h << '\n';
  }
  return Fnv1aHex(os.str());
}

Orientation OrientationFromDegrees(int degrees) {
  switch (degrees) {
    case 0:
      return Orientation::k0;
    case 90:
      return Orientation::k90;
    case 180:
      return Orientation::k180;
    case 270:
      return Orientation::k270;
    default:
      Fail(ErrorCode::kParse,
           "orientation must be one of 0/90/180/270, got " +
               std::to_string(degrees));
  }
}

bool Overlaps(const OBB& a, const OBB& b) {
  return a.x < b.right() && b.x < a.right() && a.y < b.top() && b.y < a.top();
}

OBB Union(const OBB& a, const OBB& b) {
  const int x0 = std::min(a.x, b.x);
  const int y0 = std::min(a.y, b.y);
  const int x1 = std::max(a.right(), b.right());
  const int y1 = std::max(a.top(), b.top());
  return OBB{x0, y0, x1 - x0, y1 - y0};
}

long ForbiddenMask::count() const {
  return std::count_if(cells_.begin(), cells_.end(),
                       [](std::uint8_t c) { return c != 0; });
}

bool ForbiddenMask::any_in(const OBB& box) const {
  const int x0 = std::max(box.x, 0);
  const int y0 = std::max(box.y, 0);
  const int x1 = std::min(box.right(), width_);
  const int y1 = std::min(box.top(), height_);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      if (at(x, y)) return true;
    }
  }
  return false;
}

Scene Scene::Empty(int grid_w, int grid_h, const Catalog& catalog) {
  Scene scene;
  scene.grid_w = grid_w;
  scene.grid_h = grid_h;
  scene.catalog_name = catalog.name();
  scene.catalog_hash = catalog.Hash();
  scene.forbidden = ForbiddenMask(grid_w, grid_h);
  return scene;
}

const Unit* Scene::find(int unit_id) const {
  for (const auto& u : units) {
    if (u.unit_id == unit_id) return &u;
  }
  return nullptr;
}

int Scene::next_unit_id() const {
  int next = 0;
  for (const auto& u : units) next = std::max(next, u.unit_id + 1);
  return next;
}

const char* ViolationKindName(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kDuplicateId:
      return "duplicate_id";
    case ViolationKind::kDegenerateBox:
      return "degenerate_box";
    case ViolationKind::kOutOfBounds:
      return "out_of_bounds";
    case ViolationKind::kUnknownCategory:
      return "unknown_category";
    case ViolationKind::kForbiddenKindUnit:
      return "forbidden_kind_unit";
    case ViolationKind::kOverlap:
      return "overlap";
    case ViolationKind::kForbiddenCell:
      return "forbidden_cell";
    case ViolationKind::kMaskShape:
      return "mask_shape";
  }
  return "?";
}

std::vector<Violation> ValidateScene(const Scene& scene, const Catalog* catalog) {
  std::vector<Violation> out;
  const bool mask_ok = scene.forbidden.width() == scene.grid_w &&
                       scene.forbidden.height() == scene.grid_h;
  if (!mask_ok) {
    out.push_back({ViolationKind::kMaskShape, {}, {},
                   "forbidden mask shape does not match the grid"});
  }
  if (scene.grid_w <= 0 || scene.grid_h <= 0) {
    out.push_back({ViolationKind::kMaskShape, {}, {}, "grid dims must be positive"});
    return out;
  }

  std::map<int, int> seen;
  for (const auto& u : scene.units) {
    if (++seen[u.unit_id] == 2) {
      out.push_back({ViolationKind::kDuplicateId, {u.unit_id}, {},
                     "unit id " + std::to_string(u.unit_id) + " is not unique"});
    }
  }

  std::vector<const Unit*> placed;
  for (const auto& u : scene.units) {
    const std::string id = std::to_string(u.unit_id);
    if (u.obb.w <= 0 || u.obb.h <= 0) {
      out.push_back({ViolationKind::kDegenerateBox, {u.unit_id}, {},
                     "unit " + id + " has non-positive extent"});
      continue;
    }
    if (!scene.InBounds(u.obb)) {
      out.push_back({ViolationKind::kOutOfBounds, {u.unit_id}, {},
                     "unit " + id + " lies outside the grid"});
      continue;
    }
    if (catalog != nullptr) {
      if (!catalog->Contains(u.category_id)) {
        out.push_back({ViolationKind::kUnknownCategory, {u.unit_id}, {},
                       "unit " + id + " has unknown category " +
                           std::to_string(u.category_id)});
        continue;
      }
      if (catalog->at(u.category_id).kind == UnitKind::kForbidden) {
        out.push_back({ViolationKind::kForbiddenKindUnit, {u.unit_id}, {},
                       "unit " + id +
                           " is of forbidden kind; forbidden areas belong in the mask"});
        continue;
      }
    }
    placed.push_back(&u);
  }

  for (size_t i = 0; i < placed.size(); ++i) {
    for (size_t j = i + 1; j < placed.size(); ++j) {
      if (Overlaps(placed[i]->obb, placed[j]->obb)) {
        out.push_back({ViolationKind::kOverlap,
                       {placed[i]->unit_id, placed[j]->unit_id},
                       {},
                       "units " + std::to_string(placed[i]->unit_id) + " and " +
                           std::to_string(placed[j]->unit_id) + " overlap"});
      }
    }
  }

  if (mask_ok) {
    for (const Unit* u : placed) {
      Violation v{ViolationKind::kForbiddenCell, {u->unit_id}, {}, {}};
      for (int y = u->obb.y; y < u->obb.top(); ++y) {
        for (int x = u->obb.x; x < u->obb.right(); ++x) {
          if (scene.forbidden.at(x, y) && v.cells.size() < 16) {
            v.cells.emplace_back(x, y);
          }
        }
      }
      if (!v.cells.empty()) {
        v.message = "unit " + std::to_string(u->unit_id) +
                    " covers forbidden cells";
        out.push_back(std::move(v));
      }
    }
  }
  return out;
}

double ObbDistance(const OBB& a, const OBB& b) {
  const double dx = std::max({0, a.x - b.right(), b.x - a.right()});
  const double dy = std::max({0, a.y - b.top(), b.y - a.top()});
  return std::sqrt(dx * dx + dy * dy);
}

const char* DistanceBinName(DistanceBin bin) {
  switch (bin) {
    case DistanceBin::kNextTo:
      return "next_to";
    case DistanceBin::kAdjacent:
      return "adjacent";
    case DistanceBin::kProximal:
      return "proximal";
    case DistanceBin::kDistant:
      return "distant";
  }
  return "?";
}

DistanceBin ClassifyDistance(double d, double scale) {
  if (!(d >= 0.0) || !std::isfinite(d)) {
    Fail(ErrorCode::kInvalidArgument, "distance must be finite and >= 0");
  }
  if (d == 0.0) return DistanceBin::kNextTo;
  if (d <= kAdjacentLimit * scale) return DistanceBin::kAdjacent;
  if (d <= kProximalLimit * scale) return DistanceBin::kProximal;
  return DistanceBin::kDistant;
}

BinInterval BinBounds(DistanceBin bin, double scale) {
  switch (bin) {
    case DistanceBin::kNextTo:
      return {0.0, 0.0, false};
    case DistanceBin::kAdjacent:
      return {0.0, kAdjacentLimit * scale, true};
    case DistanceBin::kProximal:
      return {kAdjacentLimit * scale, kProximalLimit * scale, true};
    case DistanceBin::kDistant:
      return {kProximalLimit * scale, std::numeric_limits<double>::infinity(), true};
  }
  return {0.0, 0.0, false};
}

}  // namespace siteplan
