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

#ifndef VIN_TILER_H_
#define VIN_TILER_H_

#include <cstdint>
#include <string>
#include <vector>

#include "vin/slide_io.h"

namespace vin {

inline constexpr int kPatchSide = 256;
inline constexpr int kGridDim = 16;
inline constexpr int kRegionSide = kPatchSide * kGridDim;  // 4096
inline constexpr int kPatchesPerRegion = kGridDim * kGridDim;
inline constexpr double kDefaultOverlap = 0.10;

struct RegionId {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const RegionId&, const RegionId&) = default;
};

struct PixelPoint {
  std::int64_t x = 0;
  std::int64_t y = 0;
  friend auto operator<=>(const PixelPoint&, const PixelPoint&) = default;
};

struct RegionSpec {
  RegionId id;
  PixelPoint origin;  // level-0
  int side = kRegionSide;
  friend bool operator==(const RegionSpec&, const RegionSpec&) = default;
};

struct GridPos {
  int r = 0;
  int c = 0;
  friend auto operator<=>(const GridPos&, const GridPos&) = default;
};

struct PatchSpec {
  RegionId parent;
  GridPos grid;
  PixelPoint origin;
  int side = kPatchSide;
};

/// Per-axis region origins: 0, stride, 2*stride, ... with the last origin
/// clamped to max(0, extent - side) and duplicates dropped.
std::vector<std::int64_t> axis_origins(std::int64_t extent, int side, double overlap);

/// floor(side * (1 - overlap)), at least 1.
int region_stride(int side, double overlap);

/// Row-major region plan covering every pixel of a width x height slide.
/// Throws kInvalidOverlap unless 0 <= overlap < 1.
std::vector<RegionSpec> plan_regions(std::int64_t width, std::int64_t height,
                                     int side = kRegionSide,
                                     double overlap = kDefaultOverlap);

/// The 256 patches of a region in row-major order. Throws kInvalidRegionSide
/// unless region.side == 4096.
std::vector<PatchSpec> grid_patches(const RegionSpec& region);

/// side x side window starting at origin; pixels outside the image are white.
RasterImage crop(const RasterImage& img, PixelPoint origin, int side);
/// Rectangular variant used by the view service.
RasterImage crop(const RasterImage& img, PixelPoint origin, int width, int height);

std::string region_plan_to_json(const std::vector<RegionSpec>& regions);
std::vector<RegionSpec> region_plan_from_json(const std::string& text);

}  // namespace vin

#endif  // VIN_TILER_H_
