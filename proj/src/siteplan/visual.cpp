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

#include "siteplan/visual.hpp"

#include <cmath>

#include "siteplan/error.hpp"

namespace siteplan {

namespace {

std::string LevelName(int level) { return "visual.c" + std::to_string(level + 1); }

ad::Var P(ad::Tape& tape, const ParamSet& params, const std::string& name) {
  return params.Bind(tape, name);
}

}  // namespace

void AddVisualParams(const VisualConfig& config, ParamSet& params, Rng& rng) {
  int in = 2;
  for (int l = 0; l < kPyramidLevels; ++l) {
    const int out = config.channels[static_cast<size_t>(l)];
    params.AddWeight(LevelName(l) + ".w", out, in * 9, in * 9, rng);
    params.AddConstant(LevelName(l) + ".b", out, 1, 0.0);
    params.AddWeight("visual.lateral" + std::to_string(l + 1) + ".w", config.lateral_channels, out,
                     out, rng);
    params.AddConstant("visual.lateral" + std::to_string(l + 1) + ".b", config.lateral_channels,
                       1, 0.0);
    in = out;
  }
  const int lc = config.lateral_channels;
  params.AddWeight("visual.block.w", lc, lc * 9, lc * 9, rng);
  params.AddConstant("visual.block.b", lc, 1, 0.0);
  params.AddConstant("visual.bn.gamma", lc, 1, 1.0);
  params.AddConstant("visual.bn.beta", lc, 1, 0.0);
  const int flat = lc * config.bins * config.bins;
  params.AddWeight("visual.proj.w", config.clue_dim, flat, flat, rng);
  params.AddConstant("visual.proj.b", config.clue_dim, 1, 0.0);
}

Pyramid EncodeImages(ad::Tape& tape, const ParamSet& params, const VisualConfig& config,
                     const std::vector<const SiteImage*>& images) {
  if (images.empty()) Fail(ErrorCode::kInvalidArgument, "no images to encode");
  const int res = images[0]->resolution;
  if (res % 16 != 0) {
    Fail(ErrorCode::kInvalidArgument, "image resolution must be divisible by 16");
  }
  const auto batch = static_cast<Eigen::Index>(images.size());
  const Eigen::Index px = static_cast<Eigen::Index>(res) * res;
  ad::Mat input(2, px * batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const SiteImage& img = *images[static_cast<size_t>(b)];
    if (img.resolution != res) Fail(ErrorCode::kInvalidArgument, "images differ in resolution");
    for (Eigen::Index p = 0; p < px; ++p) {
      input(0, b * px + p) = img.depth[static_cast<size_t>(p)];
      input(1, b * px + p) = img.mask[static_cast<size_t>(p)];
    }
  }
  Pyramid out;
  ad::Var x = tape.Constant(std::move(input));
  ad::ImageShape shape{2, res, res, static_cast<int>(batch)};
  for (int l = 0; l < kPyramidLevels; ++l) {
    x = ad::Relu(ad::Conv3x3(x, P(tape, params, LevelName(l) + ".w"),
                             P(tape, params, LevelName(l) + ".b"), shape, 2));
    shape = ad::ImageShape{config.channels[static_cast<size_t>(l)], ad::ConvOutSize(shape.height, 2),
                           ad::ConvOutSize(shape.width, 2), shape.batch};
    out.levels[static_cast<size_t>(l)] = x;
    out.shapes[static_cast<size_t>(l)] = shape;
  }
  return out;
}

int LevelForBox(const SiteImage& image, const OBB& box) {
  const double side = std::sqrt(static_cast<double>(box.w) * box.h) * image.scale;
  if (side >= 32) return 3;
  if (side >= 16) return 2;
  if (side >= 8) return 1;
  return 0;
}

ad::PoolRegion RegionForBox(const SiteImage& image, const OBB& box, int level, int image_index) {
  const double stride = std::ldexp(1.0, level + 1);
  const auto [x0, y0] = image.GridToPixel(box.x, box.y);
  const auto [x1, y1] = image.GridToPixel(box.right(), box.top());
  return ad::PoolRegion{image_index, x0 / stride, y0 / stride, x1 / stride, y1 / stride};
}

ad::Var CropClues(ad::Tape& tape, const ParamSet& params, const VisualConfig& config,
                  const Pyramid& pyramid, const std::vector<const SiteImage*>& images,
                  const std::vector<ClueBox>& boxes, bool training, ad::BatchNormStats& bn) {
  if (boxes.empty()) Fail(ErrorCode::kInvalidArgument, "no boxes to crop");
  std::array<std::vector<ad::PoolRegion>, kPyramidLevels> regions;
  std::array<std::vector<int>, kPyramidLevels> owners;
  for (size_t k = 0; k < boxes.size(); ++k) {
    const auto& cb = boxes[k];
    if (cb.box.w <= 0 || cb.box.h <= 0) Fail(ErrorCode::kInvalidArgument, "degenerate clue box");
    const SiteImage& img = *images[static_cast<size_t>(cb.image)];
    const int level = LevelForBox(img, cb.box);
    regions[static_cast<size_t>(level)].push_back(RegionForBox(img, cb.box, level, cb.image));
    owners[static_cast<size_t>(level)].push_back(static_cast<int>(k));
  }
  std::vector<ad::Var> patches;
  std::vector<int> order;  // level-major position -> box index
  for (int l = 0; l < kPyramidLevels; ++l) {
    const auto& r = regions[static_cast<size_t>(l)];
    if (r.empty()) continue;
    ad::Var pooled = ad::RegionPool(pyramid.levels[static_cast<size_t>(l)],
                                    pyramid.shapes[static_cast<size_t>(l)], r, config.bins);
    const std::string lat = "visual.lateral" + std::to_string(l + 1);
    patches.push_back(ad::Linear(P(tape, params, lat + ".w"), P(tape, params, lat + ".b"), pooled));
    order.insert(order.end(), owners[static_cast<size_t>(l)].begin(),
                 owners[static_cast<size_t>(l)].end());
  }
  const int n = static_cast<int>(boxes.size());
  ad::Var x = patches.size() == 1 ? patches[0] : ad::ConcatCols(patches);
  const ad::ImageShape shape{config.lateral_channels, config.bins, config.bins, n};
  x = ad::Conv3x3(x, P(tape, params, "visual.block.w"), P(tape, params, "visual.block.b"), shape, 1);
  x = ad::BatchNorm(x, P(tape, params, "visual.bn.gamma"), P(tape, params, "visual.bn.beta"),
                    training, &bn);
  x = ad::Relu(x);
  x = ad::Reshape(x, static_cast<Eigen::Index>(config.lateral_channels) * config.bins * config.bins, n);
  x = ad::Linear(P(tape, params, "visual.proj.w"), P(tape, params, "visual.proj.b"), x);
  std::vector<int> inverse(static_cast<size_t>(n));
  for (int pos = 0; pos < n; ++pos) inverse[static_cast<size_t>(order[static_cast<size_t>(pos)])] = pos;
  return ad::GatherCols(x, inverse);
}

}  // namespace siteplan
