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

#include "vin/aggregate.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "json.hpp"
#include "vin/error.h"

namespace vin {
namespace {

using nlohmann::json;

struct Tally {
  int cautery = 0;
  int non = 0;
};

Tally tally(std::span<const PatchLabel> labels) {
  if (labels.size() != static_cast<std::size_t>(kPatchesPerRegion)) {
    throw Error(ErrorCode::kWrongPatchCount,
                "expected 256 patch entries, got " + std::to_string(labels.size()));
  }
  Tally t;
  for (PatchLabel l : labels) {
    if (l == PatchLabel::kCautery) ++t.cautery;
    if (l == PatchLabel::kNonCautery) ++t.non;
  }
  return t;
}

}  // namespace

std::string_view decision_name(Decision d) {
  switch (d) {
    case Decision::kCautery: return "cautery";
    case Decision::kNonCautery: return "non_cautery";
    case Decision::kExcluded: return "excluded";
  }
  return "";
}

std::optional<Decision> parse_decision(std::string_view name) {
  if (name == "cautery") return Decision::kCautery;
  if (name == "non_cautery") return Decision::kNonCautery;
  if (name == "excluded") return Decision::kExcluded;
  return std::nullopt;
}

RegionDecision vote_region(std::span<const PatchLabel> patch_predictions, RegionId region) {
  const Tally t = tally(patch_predictions);
  RegionDecision d{region, t.cautery, t.non, t.cautery + t.non, Decision::kExcluded};
  if (d.participating > 0) {
    d.decision = t.cautery >= t.non ? Decision::kCautery : Decision::kNonCautery;
  }
  return d;
}

Decision region_truth(std::span<const PatchLabel> patch_labels) {
  const Tally t = tally(patch_labels);
  if (t.cautery == t.non) return Decision::kExcluded;  // includes zero participants
  return t.cautery > t.non ? Decision::kCautery : Decision::kNonCautery;
}

std::vector<MarginSegment> stitch_margins(const std::vector<RegionDecision>& decisions,
                                          int stride) {
  std::set<RegionId> cautery;
  for (const auto& d : decisions) {
    if (d.decision == Decision::kCautery) cautery.insert(d.region);
  }
  std::set<RegionId> seen;
  std::vector<MarginSegment> segments;
  for (const RegionId& start : cautery) {
    if (seen.count(start)) continue;
    std::vector<RegionId> members;
    std::vector<RegionId> stack{start};
    seen.insert(start);
    while (!stack.empty()) {
      const RegionId cur = stack.back();
      stack.pop_back();
      members.push_back(cur);
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const RegionId n{cur.row + dr, cur.col + dc};
          if ((dr || dc) && cautery.count(n) && seen.insert(n).second) stack.push_back(n);
        }
      }
    }
    if (members.size() < 2) continue;  // isolated region
    std::sort(members.begin(), members.end());
    segments.push_back({0, members, static_cast<std::int64_t>(members.size()) * stride});
  }
  std::stable_sort(segments.begin(), segments.end(), [](const auto& a, const auto& b) {
    if (a.regions.size() != b.regions.size()) return a.regions.size() > b.regions.size();
    return a.regions.front() < b.regions.front();
  });
  for (std::size_t i = 0; i < segments.size(); ++i) segments[i].segment_id = static_cast<int>(i);
  return segments;
}

RasterImage render_overlay(const RasterImage& base, const OverlayGeometry& g,
                           const std::vector<RegionDecision>& decisions,
                           const std::vector<RegionId>& equivocal_regions) {
  if (g.factor < 1) throw Error(ErrorCode::kGeometryMismatch, "downsample factor must be >= 1");
  const std::int64_t want_w = (g.slide_width + g.factor - 1) / g.factor;
  const std::int64_t want_h = (g.slide_height + g.factor - 1) / g.factor;
  if (base.width() != want_w || base.height() != want_h) {
    throw Error(ErrorCode::kGeometryMismatch,
                "overlay base is " + std::to_string(base.width()) + "x" +
                    std::to_string(base.height()) + ", expected " + std::to_string(want_w) + "x" +
                    std::to_string(want_h));
  }
  const auto plan = plan_regions(g.slide_width, g.slide_height, g.region_side, g.overlap);
  std::map<RegionId, RegionSpec> by_id;
  for (const auto& r : plan) by_id[r.id] = r;
  auto lookup = [&](RegionId id) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::kGeometryMismatch, "region (" + std::to_string(id.row) + ", " +
                                                    std::to_string(id.col) +
                                                    ") is not part of the slide's plan");
    }
    return it->second;
  };

  // 0 untouched, 1 equivocal, 2 non-cautery, 3 cautery; higher wins.
  std::vector<std::uint8_t> paint(static_cast<std::size_t>(base.width()) * base.height(), 0);
  auto fill = [&](const RegionSpec& r, std::uint8_t level) {
    // Pixel p is inside when origin <= (p + 0.5) * factor < origin + side.
    auto first = [&](std::int64_t o) {
      return static_cast<int>(std::max<std::int64_t>(
          0, static_cast<std::int64_t>(std::ceil(static_cast<double>(o) / g.factor - 0.5))));
    };
    const int x0 = first(r.origin.x);
    const int x1 = std::min(base.width(), first(r.origin.x + r.side));
    const int y0 = first(r.origin.y);
    const int y1 = std::min(base.height(), first(r.origin.y + r.side));
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        auto& p = paint[static_cast<std::size_t>(y) * base.width() + x];
        p = std::max(p, level);
      }
    }
  };
  for (const auto& id : equivocal_regions) fill(lookup(id), 1);
  for (const auto& d : decisions) {
    const RegionSpec r = lookup(d.region);
    if (d.decision == Decision::kNonCautery) fill(r, 2);
  }
  for (const auto& d : decisions) {
    const RegionSpec r = lookup(d.region);
    if (d.decision == Decision::kCautery) fill(r, 3);
  }

  RasterImage out = base;
  auto blend = [](std::uint8_t b, std::uint8_t ink) {
    return static_cast<std::uint8_t>((b + ink + 1) / 2);  // round(0.5 b + 0.5 ink)
  };
  for (int y = 0; y < base.height(); ++y) {
    for (int x = 0; x < base.width(); ++x) {
      const std::uint8_t level = paint[static_cast<std::size_t>(y) * base.width() + x];
      if (level == 0) continue;
      const Rgb ink = level == 3 ? kCauteryInk : level == 2 ? kNonCauteryInk : kEquivocalInk;
      const Rgb b = base.at(x, y);
      out.set(x, y, {blend(b.r, ink.r), blend(b.g, ink.g), blend(b.b, ink.b)});
    }
  }
  return out;
}

std::string decisions_to_json(const std::vector<RegionDecision>& decisions) {
  json arr = json::array();
  for (const auto& d : decisions) {
    arr.push_back({{"region_id", {d.region.row, d.region.col}},
                   {"votes_cautery", d.votes_cautery},
                   {"votes_non", d.votes_non},
                   {"participating", d.participating},
                   {"decision", decision_name(d.decision)}});
  }
  return arr.dump(1);
}

std::vector<RegionDecision> decisions_from_json(const std::string& text) {
  std::vector<RegionDecision> out;
  try {
    for (const auto& j : json::parse(text)) {
      RegionDecision d;
      d.region = {j.at("region_id").at(0).get<int>(), j.at("region_id").at(1).get<int>()};
      d.votes_cautery = j.at("votes_cautery").get<int>();
      d.votes_non = j.at("votes_non").get<int>();
      d.participating = j.at("participating").get<int>();
      const auto name = j.at("decision").get<std::string>();
      const auto dec = parse_decision(name);
      if (!dec) throw Error(ErrorCode::kDecodeError, "unknown decision '" + name + "'");
      d.decision = *dec;
      if (d.participating != d.votes_cautery + d.votes_non ||
          (d.decision == Decision::kExcluded) != (d.participating == 0)) {
        throw Error(ErrorCode::kDecodeError, "inconsistent region decision record");
      }
      out.push_back(d);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kDecodeError, std::string("decisions json: ") + e.what());
  }
  return out;
}

std::string segments_to_json(const std::vector<MarginSegment>& segments) {
  json arr = json::array();
  for (const auto& s : segments) {
    json regions = json::array();
    for (const auto& r : s.regions) regions.push_back({r.row, r.col});
    arr.push_back({{"segment_id", s.segment_id},
                   {"regions", std::move(regions)},
                   {"approx_length_px", s.approx_length}});
  }
  return arr.dump(1);
}

std::vector<MarginSegment> segments_from_json(const std::string& text) {
  std::vector<MarginSegment> out;
  try {
    for (const auto& j : json::parse(text)) {
      MarginSegment s;
      s.segment_id = j.at("segment_id").get<int>();
      for (const auto& r : j.at("regions")) s.regions.push_back({r.at(0).get<int>(), r.at(1).get<int>()});
      s.approx_length = j.at("approx_length_px").get<std::int64_t>();
      out.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kDecodeError, std::string("segments json: ") + e.what());
  }
  return out;
}

}  // namespace vin
