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

// Visual clues: a four-level strided convolutional pyramid over the site
// image, exact bilinear region pooling of every node box from the level that
// matches its size, and a Conv-BN-ReLU block projected to a clue vector.

#pragma once

#include <array>
#include <string>
#include <vector>

#include "siteplan/autodiff.hpp"
#include "siteplan/params.hpp"
#include "siteplan/render.hpp"

namespace siteplan {

inline constexpr int kPyramidLevels = 4;

struct VisualConfig {
  std::array<int, kPyramidLevels> channels{8, 16, 32, 64};
  int lateral_channels = 16;
  int bins = 7;
  int clue_dim = 128;
};

void AddVisualParams(const VisualConfig& config, ParamSet& params, Rng& rng);

struct Pyramid {
  std::array<ad::Var, kPyramidLevels> levels;
  std::array<ad::ImageShape, kPyramidLevels> shapes;
};

// Images must share one resolution divisible by 16; throws kInvalidArgument
// otherwise.
Pyramid EncodeImages(ad::Tape& tape, const ParamSet& params, const VisualConfig& config,
                     const std::vector<const SiteImage*>& images);

// Level by box side in image pixels: >= 32 -> 3, >= 16 -> 2, >= 8 -> 1, else 0.
int LevelForBox(const SiteImage& image, const OBB& box);

// Box corners in the pixel units of a pyramid level (stride 2^(level+1)).
ad::PoolRegion RegionForBox(const SiteImage& image, const OBB& box, int level, int image_index);

struct ClueBox {
  int image = 0;  // index into the encoded batch
  OBB box;
};

// Clue per box, clue_dim x boxes, in the order given. Zero-area boxes are
// rejected. BatchNorm uses batch statistics when training (updating bn) and
// the running statistics otherwise.
ad::Var CropClues(ad::Tape& tape, const ParamSet& params, const VisualConfig& config,
                  const Pyramid& pyramid, const std::vector<const SiteImage*>& images,
                  const std::vector<ClueBox>& boxes, bool training, ad::BatchNormStats& bn);

}  // namespace siteplan
