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

#include "vin/annotation.h"

#include <algorithm>
#include <cstdlib>
#include <set>

#include "json.hpp"
#include "vin/binary_io.h"
#include "vin/error.h"

namespace vin {
namespace {

using nlohmann::json;

// ceil(p / q) for q > 0.
std::int64_t ceil_div(std::int64_t p, std::int64_t q) {
  std::int64_t d = p / q;
  if (p % q != 0 && p > 0) ++d;
  return d;
}

std::string_view source_name(AnnotationSource s) {
  return s == AnnotationSource::kRefined ? "refined" : "manual";
}

PixelLabel pixel_label_of(AnnotationClass c) {
  switch (c) {
    case AnnotationClass::kCautery: return PixelLabel::kCautery;
    case AnnotationClass::kNonCautery: return PixelLabel::kNonCautery;
    case AnnotationClass::kEquivocal: return PixelLabel::kEquivocal;
  }
  return PixelLabel::kNone;
}

}  // namespace

std::string_view class_name(AnnotationClass c) {
  switch (c) {
    case AnnotationClass::kCautery: return "cautery";
    case AnnotationClass::kNonCautery: return "non_cautery";
    case AnnotationClass::kEquivocal: return "equivocal";
  }
  return "";
}

std::optional<AnnotationClass> parse_class(std::string_view name) {
  if (name == "cautery") return AnnotationClass::kCautery;
  if (name == "non_cautery") return AnnotationClass::kNonCautery;
  if (name == "equivocal") return AnnotationClass::kEquivocal;
  return std::nullopt;
}

std::string_view patch_label_name(PatchLabel l) {
  switch (l) {
    case PatchLabel::kNonCautery: return "non_cautery";
    case PatchLabel::kCautery: return "cautery";
    case PatchLabel::kEquivocal: return "equivocal";
    case PatchLabel::kUnlabeled: return "unlabeled";
  }
  return "";
}

void validate(const AnnotationSet& set) {
  std::set<std::string> ids;
  for (const auto& a : set.annotations) {
    if (a.id.empty()) throw Error(ErrorCode::kValidationError, "annotation id is empty");
    if (!ids.insert(a.id).second) {
      throw Error(ErrorCode::kValidationError, "duplicate annotation id '" + a.id + "'");
    }
    if (a.points.empty()) {
      throw Error(ErrorCode::kValidationError, "annotation '" + a.id + "' has no points");
    }
  }
  if (set.version < 0) throw Error(ErrorCode::kValidationError, "negative version");
}

std::string annotations_to_json(const AnnotationSet& set) {
  json anns = json::array();
  for (const auto& a : set.annotations) {
    json pts = json::array();
    for (const auto& p : a.points) pts.push_back({p.x, p.y});
    anns.push_back({{"id", a.id},
                    {"class", class_name(a.cls)},
                    {"points", std::move(pts)},
                    {"source", source_name(a.source)}});
  }
  json doc = {{"slide_id", set.slide_id}, {"version", set.version}, {"annotations", anns}};
  return doc.dump(1);
}

AnnotationSet annotations_from_json(const std::string& text) {
  AnnotationSet set;
  try {
    const json doc = json::parse(text);
    set.slide_id = doc.at("slide_id").get<std::string>();
    set.version = doc.at("version").get<std::int64_t>();
    for (const auto& j : doc.at("annotations")) {
      Annotation a;
      a.id = j.at("id").get<std::string>();
      const auto cls_name = j.at("class").get<std::string>();
      const auto cls = parse_class(cls_name);
      if (!cls) {
        throw Error(ErrorCode::kValidationError, "unknown annotation class '" + cls_name + "'");
      }
      a.cls = *cls;
      const auto src = j.value("source", std::string("manual"));
      if (src == "manual") {
        a.source = AnnotationSource::kManual;
      } else if (src == "refined") {
        a.source = AnnotationSource::kRefined;
      } else {
        throw Error(ErrorCode::kValidationError, "unknown annotation source '" + src + "'");
      }
      for (const auto& p : j.at("points")) {
        if (!p.is_array() || p.size() != 2) {
          throw Error(ErrorCode::kValidationError, "points must be [x, y] pairs");
        }
        a.points.push_back({p.at(0).get<std::int64_t>(), p.at(1).get<std::int64_t>()});
      }
      set.annotations.push_back(std::move(a));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kValidationError, std::string("annotation json: ") + e.what());
  }
  validate(set);
  return set;
}

AnnotationSet read_annotations(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return annotations_from_json(std::string(bytes.begin(), bytes.end()));
}

void write_annotations(const AnnotationSet& set, const std::filesystem::path& path) {
  write_file_atomic(path, annotations_to_json(set));
}

std::vector<PixelPoint> bresenham(PixelPoint p0, PixelPoint p1) {
  const std::int64_t dx = p1.x - p0.x;
  const std::int64_t dy = p1.y - p0.y;
  const bool x_major = std::llabs(dx) >= std::llabs(dy);
  // Work in (major, minor) coordinates anchored at the endpoint with the
  // smaller major coordinate so that rounding is direction independent.
  auto major = [&](PixelPoint p) { return x_major ? p.x : p.y; };
  auto minor = [&](PixelPoint p) { return x_major ? p.y : p.x; };
  const PixelPoint a = major(p0) <= major(p1) ? p0 : p1;
  const PixelPoint b = major(p0) <= major(p1) ? p1 : p0;
  const std::int64_t span = major(b) - major(a);
  const std::int64_t rise = minor(b) - minor(a);

  std::vector<PixelPoint> out;
  out.reserve(static_cast<std::size_t>(std::llabs(x_major ? dx : dy)) + 1);
  const std::int64_t step = major(p1) >= major(p0) ? 1 : -1;
  for (std::int64_t m = major(p0);; m += step) {
    std::int64_t n;
    if (span == 0) {
      n = minor(a);
    } else {
      // Line minor value is minor(a) + (m - major(a)) * rise / span; take
      // the nearest integer, halves rounded down.
      const std::int64_t num = 2 * (minor(a) * span + (m - major(a)) * rise) - span;
      n = ceil_div(num, 2 * span);
    }
    out.push_back(x_major ? PixelPoint{m, n} : PixelPoint{n, m});
    if (m == major(p1)) break;
  }
  return out;
}

bool LabelMask::any_labeled() const {
  return std::any_of(values.begin(), values.end(),
                     [](PixelLabel v) { return v != PixelLabel::kNone; });
}

LabelMask rasterize(const AnnotationSet& set, Bounds bounds) {
  if (bounds.w < 1 || bounds.h < 1) {
    throw Error(ErrorCode::kInvalidArgument, "mask bounds must be non-empty");
  }
  LabelMask mask{bounds, std::vector<PixelLabel>(
                             static_cast<std::size_t>(bounds.w * bounds.h), PixelLabel::kNone)};
  auto paint = [&](PixelPoint p, PixelLabel label) {
    if (p.x < bounds.x || p.y < bounds.y || p.x >= bounds.x + bounds.w ||
        p.y >= bounds.y + bounds.h) {
      return;
    }
    auto& v = mask.values[static_cast<std::size_t>((p.y - bounds.y) * bounds.w + (p.x - bounds.x))];
    if (label > v) v = label;
  };
  for (const auto& a : set.annotations) {
    const PixelLabel label = pixel_label_of(a.cls);
    const auto& pts = a.points;
    if (pts.size() == 1) {
      paint(pts[0], label);
      continue;
    }
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      // Skip segments whose bounding box misses the window entirely.
      const auto [xlo, xhi] = std::minmax(pts[i].x, pts[i + 1].x);
      const auto [ylo, yhi] = std::minmax(pts[i].y, pts[i + 1].y);
      if (xhi < bounds.x || yhi < bounds.y || xlo >= bounds.x + bounds.w ||
          ylo >= bounds.y + bounds.h) {
        continue;
      }
      for (const auto& p : bresenham(pts[i], pts[i + 1])) paint(p, label);
    }
  }
  return mask;
}

PixelCounts count_pixels(const LabelMask& mask, Bounds window) {
  PixelCounts counts;
  const std::int64_t x0 = std::max(window.x, mask.bounds.x);
  const std::int64_t y0 = std::max(window.y, mask.bounds.y);
  const std::int64_t x1 = std::min(window.x + window.w, mask.bounds.x + mask.bounds.w);
  const std::int64_t y1 = std::min(window.y + window.h, mask.bounds.y + mask.bounds.h);
  for (std::int64_t y = y0; y < y1; ++y) {
    for (std::int64_t x = x0; x < x1; ++x) {
      switch (mask.at(x, y)) {
        case PixelLabel::kCautery: ++counts.cautery; break;
        case PixelLabel::kNonCautery: ++counts.non_cautery; break;
        case PixelLabel::kEquivocal: ++counts.equivocal; break;
        case PixelLabel::kNone: break;
      }
    }
  }
  return counts;
}

PatchLabel label_from_counts(const PixelCounts& counts) {
  const std::int64_t top = std::max({counts.cautery, counts.non_cautery, counts.equivocal});
  if (top == 0) return PatchLabel::kUnlabeled;
  if (counts.equivocal == top &&
      counts.equivocal > std::max(counts.cautery, counts.non_cautery)) {
    return PatchLabel::kEquivocal;
  }
  if (counts.cautery == counts.non_cautery) return PatchLabel::kUnlabeled;
  // Equivocal tied with the larger of the two is not a strict plurality;
  // the binary plurality decides.
  return counts.cautery > counts.non_cautery ? PatchLabel::kCautery : PatchLabel::kNonCautery;
}

PatchLabel label_patch(const LabelMask& mask, const PatchSpec& patch) {
  return label_from_counts(
      count_pixels(mask, {patch.origin.x, patch.origin.y, patch.side, patch.side}));
}

std::vector<RegionSpec> filter_regions(const std::vector<RegionSpec>& regions,
                                       const std::vector<LabelMask>& masks) {
  if (regions.size() != masks.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one mask per region required");
  }
  std::vector<RegionSpec> kept;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (masks[i].any_labeled()) kept.push_back(regions[i]);
  }
  return kept;
}

SlideLabels label_slide(const AnnotationSet& set, std::int64_t width, std::int64_t height,
                        const std::vector<RegionSpec>& plan) {
  SlideLabels out{set.slide_id, width, height, {}};
  std::vector<LabelMask> masks;
  masks.reserve(plan.size());
  for (const auto& region : plan) {
    masks.push_back(rasterize(set, {region.origin.x, region.origin.y, region.side, region.side}));
  }
  const auto kept = filter_regions(plan, masks);
  std::size_t mi = 0;
  for (const auto& region : kept) {
    while (!(plan[mi] == region)) ++mi;
    RegionLabels rl{region, {}};
    const auto patches = grid_patches(region);
    for (std::size_t p = 0; p < patches.size(); ++p) {
      rl.patches[p] = label_patch(masks[mi], patches[p]);
    }
    out.regions.push_back(rl);
  }
  return out;
}

std::string slide_labels_to_json(const SlideLabels& labels) {
  json regions = json::array();
  for (const auto& r : labels.regions) {
    json patches = json::array();
    for (auto p : r.patches) patches.push_back(static_cast<int>(p));
    regions.push_back({{"region_id", {r.region.id.row, r.region.id.col}},
                       {"x", r.region.origin.x},
                       {"y", r.region.origin.y},
                       {"side", r.region.side},
                       {"patch_labels", std::move(patches)}});
  }
  json doc = {{"slide_id", labels.slide_id},
              {"width", labels.width},
              {"height", labels.height},
              {"regions", std::move(regions)}};
  return doc.dump(1);
}

SlideLabels slide_labels_from_json(const std::string& text) {
  SlideLabels labels;
  try {
    const json doc = json::parse(text);
    labels.slide_id = doc.at("slide_id").get<std::string>();
    labels.width = doc.at("width").get<std::int64_t>();
    labels.height = doc.at("height").get<std::int64_t>();
    for (const auto& j : doc.at("regions")) {
      RegionLabels r;
      r.region.id = {j.at("region_id").at(0).get<int>(), j.at("region_id").at(1).get<int>()};
      r.region.origin = {j.at("x").get<std::int64_t>(), j.at("y").get<std::int64_t>()};
      r.region.side = j.at("side").get<int>();
      const auto& p = j.at("patch_labels");
      if (p.size() != kPatchesPerRegion) {
        throw Error(ErrorCode::kWrongPatchCount, "labels file needs 256 patch labels per region");
      }
      for (std::size_t i = 0; i < kPatchesPerRegion; ++i) {
        const int v = p.at(i).get<int>();
        if (v < 0 || v > 3) throw Error(ErrorCode::kDecodeError, "patch label out of range");
        r.patches[i] = static_cast<PatchLabel>(v);
      }
      labels.regions.push_back(r);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kDecodeError, std::string("labels json: ") + e.what());
  }
  return labels;
}

}  // namespace vin
