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

#ifndef VIN_ANNOTATION_H_
#define VIN_ANNOTATION_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vin/tiler.h"

namespace vin {

enum class AnnotationClass : std::uint8_t { kCautery, kNonCautery, kEquivocal };
enum class AnnotationSource : std::uint8_t { kManual, kRefined };

std::string_view class_name(AnnotationClass c);  // "cautery", ...
std::optional<AnnotationClass> parse_class(std::string_view name);

struct Annotation {
  std::string id;
  AnnotationClass cls = AnnotationClass::kNonCautery;
  std::vector<PixelPoint> points;  // open polyline, level-0
  AnnotationSource source = AnnotationSource::kManual;
  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct AnnotationSet {
  std::string slide_id;
  std::int64_t version = 0;
  std::vector<Annotation> annotations;
  friend bool operator==(const AnnotationSet&, const AnnotationSet&) = default;
};

/// Throws kValidationError on duplicate ids or empty polylines.
void validate(const AnnotationSet& set);

std::string annotations_to_json(const AnnotationSet& set);
/// Throws kValidationError on unknown classes/sources or malformed fields.
AnnotationSet annotations_from_json(const std::string& text);
AnnotationSet read_annotations(const std::filesystem::path& path);
void write_annotations(const AnnotationSet& set, const std::filesystem::path& path);

/// Per-pixel label; values double as the precedence order when classes
/// collide (higher wins).
enum class PixelLabel : std::uint8_t {
  kNone = 0,
  kNonCautery = 1,
  kCautery = 2,
  kEquivocal = 3,
};

struct Bounds {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t w = 0;
  std::int64_t h = 0;
};

struct LabelMask {
  Bounds bounds;
  std::vector<PixelLabel> values;  // row-major, w * h

  PixelLabel at(std::int64_t x, std::int64_t y) const {
    return values[static_cast<std::size_t>((y - bounds.y) * bounds.w + (x - bounds.x))];
  }
  bool any_labeled() const;
};

/// Patch-level class. The numeric values are the feature-cache label bytes.
enum class PatchLabel : std::uint8_t {
  kNonCautery = 0,
  kCautery = 1,
  kEquivocal = 2,
  kUnlabeled = 3,
};

std::string_view patch_label_name(PatchLabel l);

struct PixelCounts {
  std::int64_t cautery = 0;
  std::int64_t non_cautery = 0;
  std::int64_t equivocal = 0;
};

/// Integer line from p0 to p1, both endpoints included, 8-connected,
/// max(|dx|, |dy|) + 1 pixels. On a half-way tie the minor axis steps
/// toward p1 rounding halves down, so the pixel set is independent of the
/// traversal direction.
std::vector<PixelPoint> bresenham(PixelPoint p0, PixelPoint p1);

/// Draws every polyline clipped to `bounds`, Equivocal > Cautery > NonCautery.
LabelMask rasterize(const AnnotationSet& set, Bounds bounds);

PixelCounts count_pixels(const LabelMask& mask, Bounds window);

/// Plurality rule over the counts: Equivocal only as strict plurality,
/// Cautery/NonCautery tie or all-zero counts yield Unlabeled.
PatchLabel label_from_counts(const PixelCounts& counts);
PatchLabel label_patch(const LabelMask& mask, const PatchSpec& patch);

/// Regions whose mask has at least one labeled pixel, in input order.
/// masks[i] belongs to regions[i].
std::vector<RegionSpec> filter_regions(const std::vector<RegionSpec>& regions,
                                       const std::vector<LabelMask>& masks);

/// Ground-truth patch labels for the kept regions of one slide.
struct RegionLabels {
  RegionSpec region;
  std::array<PatchLabel, kPatchesPerRegion> patches{};
};

struct SlideLabels {
  std::string slide_id;
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<RegionLabels> regions;
};

/// rasterize + filter_regions + label_patch over a region plan.
SlideLabels label_slide(const AnnotationSet& set, std::int64_t width,
                        std::int64_t height, const std::vector<RegionSpec>& plan);

std::string slide_labels_to_json(const SlideLabels& labels);
SlideLabels slide_labels_from_json(const std::string& text);

}  // namespace vin

#endif  // VIN_ANNOTATION_H_
