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

#ifndef VIN_AGGREGATE_H_
#define VIN_AGGREGATE_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vin/annotation.h"
#include "vin/slide_io.h"
#include "vin/tiler.h"

namespace vin {

enum class Decision : std::uint8_t { kCautery, kNonCautery, kExcluded };

std::string_view decision_name(Decision d);  // "cautery" | "non_cautery" | "excluded"
std::optional<Decision> parse_decision(std::string_view name);

struct RegionDecision {
  RegionId region;
  int votes_cautery = 0;
  int votes_non = 0;
  int participating = 0;
  Decision decision = Decision::kExcluded;
  friend bool operator==(const RegionDecision&, const RegionDecision&) = default;
};

struct MarginSegment {
  int segment_id = 0;
  std::vector<RegionId> regions;  // sorted row-major
  std::int64_t approx_length = 0;
  friend bool operator==(const MarginSegment&, const MarginSegment&) = default;
};

/// Majority vote over the 256 patch predictions of a region. Unlabeled and
/// Equivocal entries abstain; a tie goes to Cautery. Throws kWrongPatchCount.
RegionDecision vote_region(std::span<const PatchLabel> patch_predictions, RegionId region = {});

/// Same participation rule over ground-truth labels; a tie is Excluded.
Decision region_truth(std::span<const PatchLabel> patch_labels);

/// 8-connected components of Cautery regions with at least two members,
/// largest first, ties by the smallest member id. approx_length is
/// member count x stride.
std::vector<MarginSegment> stitch_margins(const std::vector<RegionDecision>& decisions,
                                          int stride = region_stride(kRegionSide, kDefaultOverlap));

inline constexpr Rgb kCauteryInk{255, 0, 0};
inline constexpr Rgb kNonCauteryInk{0, 0, 255};
inline constexpr Rgb kEquivocalInk{0, 255, 0};

struct OverlayGeometry {
  std::int64_t slide_width = 0;
  std::int64_t slide_height = 0;
  int region_side = kRegionSide;
  double overlap = kDefaultOverlap;
  int factor = 16;
};

/// Paints voted regions over the downsampled base with round(0.5 base +
/// 0.5 ink). A base pixel belongs to a region when its centre, mapped to
/// level 0, falls inside the region. Cautery wins over NonCautery where
/// regions overlap; `equivocal_regions` are painted green only where no
/// decision paints. Throws kGeometryMismatch when the base is not the
/// factor-downsample of the slide or a decision names an unplanned region.
RasterImage render_overlay(const RasterImage& base, const OverlayGeometry& geometry,
                           const std::vector<RegionDecision>& decisions,
                           const std::vector<RegionId>& equivocal_regions = {});

std::string decisions_to_json(const std::vector<RegionDecision>& decisions);
std::vector<RegionDecision> decisions_from_json(const std::string& text);
std::string segments_to_json(const std::vector<MarginSegment>& segments);
std::vector<MarginSegment> segments_from_json(const std::string& text);

}  // namespace vin

#endif  // VIN_AGGREGATE_H_
