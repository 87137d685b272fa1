// Copyright 2026 The vin Authors.
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

#include "vin/tiler.h"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "json.hpp"
#include "vin/error.h"

namespace vin {

int region_stride(int side, double overlap) {
  return std::max(1, static_cast<int>(std::floor(side * (1.0 - overlap))));
}

std::vector<std::int64_t> axis_origins(std::int64_t extent, int side, double overlap) {
  const int stride = region_stride(side, overlap);
  const std::int64_t last = std::max<std::int64_t>(0, extent - side);
  std::vector<std::int64_t> origins;
  for (std::int64_t o = 0;; o += stride) {
    const std::int64_t clamped = std::min(o, last);
    if (origins.empty() || origins.back() != clamped) origins.push_back(clamped);
    if (o >= last) break;
  }
  return origins;
}

std::vector<RegionSpec> plan_regions(std::int64_t width, std::int64_t height,
                                     int side, double overlap) {
  if (!(overlap >= 0.0 && overlap < 1.0)) {
    throw Error(ErrorCode::kInvalidOverlap, "overlap must lie in [0, 1)");
  }
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::kInvalidArgument, "slide dimensions must be positive");
  }
  if (side < 1) throw Error(ErrorCode::kInvalidRegionSide, "region side must be positive");
  const auto xs = axis_origins(width, side, overlap);
  const auto ys = axis_origins(height, side, overlap);
  std::vector<RegionSpec> plan;
  plan.reserve(xs.size() * ys.size());
  for (std::size_t r = 0; r < ys.size(); ++r) {
    for (std::size_t c = 0; c < xs.size(); ++c) {
      plan.push_back({{static_cast<int>(r), static_cast<int>(c)}, {xs[c], ys[r]}, side});
    }
  }
  return plan;
}

std::vector<PatchSpec> grid_patches(const RegionSpec& region) {
  if (region.side != kRegionSide) {
    throw Error(ErrorCode::kInvalidRegionSide,
                "regions must be " + std::to_string(kRegionSide) + " pixels");
  }
  std::vector<PatchSpec> patches;
  patches.reserve(kPatchesPerRegion);
  for (int r = 0; r < kGridDim; ++r) {
    for (int c = 0; c < kGridDim; ++c) {
      patches.push_back({region.id,
                         {r, c},
                         {region.origin.x + c * kPatchSide, region.origin.y + r * kPatchSide},
                         kPatchSide});
    }
  }
  return patches;
}

RasterImage crop(const RasterImage& img, PixelPoint origin, int width, int height) {
  RasterImage out(width, height);
  const std::int64_t x0 = std::max<std::int64_t>(origin.x, 0);
  const std::int64_t y0 = std::max<std::int64_t>(origin.y, 0);
  const std::int64_t x1 = std::min<std::int64_t>(origin.x + width, img.width());
  const std::int64_t y1 = std::min<std::int64_t>(origin.y + height, img.height());
  if (x0 >= x1 || y0 >= y1) return out;
  const std::size_t run = static_cast<std::size_t>(x1 - x0) * RasterImage::kChannels;
  for (std::int64_t y = y0; y < y1; ++y) {
    std::memcpy(out.row(static_cast<int>(y - origin.y)) + (x0 - origin.x) * RasterImage::kChannels,
                img.row(static_cast<int>(y)) + x0 * RasterImage::kChannels, run);
  }
  return out;
}

RasterImage crop(const RasterImage& img, PixelPoint origin, int side) {
  return crop(img, origin, side, side);
}

std::string region_plan_to_json(const std::vector<RegionSpec>& regions) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : regions) {
    arr.push_back({{"region_id", {r.id.row, r.id.col}},
                   {"x", r.origin.x},
                   {"y", r.origin.y},
                   {"side", r.side}});
  }
  return arr.dump(2);
}

std::vector<RegionSpec> region_plan_from_json(const std::string& text) {
  std::vector<RegionSpec> regions;
  try {
    for (const auto& j : nlohmann::json::parse(text)) {
      RegionSpec r;
      r.id = {j.at("region_id").at(0).get<int>(), j.at("region_id").at(1).get<int>()};
      r.origin = {j.at("x").get<std::int64_t>(), j.at("y").get<std::int64_t>()};
      r.side = j.at("side").get<int>();
      regions.push_back(r);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kDecodeError, std::string("region plan: ") + e.what());
  }
  return regions;
}

}  // namespace vin
