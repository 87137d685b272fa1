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

#include "vin/synthetic.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "vin/error.h"
#include "vin/rng.h"

namespace vin {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kRadiusTable = 4096;

struct Blob {
  double cx = 0;
  double cy = 0;
  double radius = 0;
  std::array<double, 3> amp{};
  std::array<double, 3> phase{};
  static constexpr std::array<int, 3> kHarmonics{2, 3, 5};

  double radius_at(double theta) const {
    double r = 1.0;
    for (int k = 0; k < 3; ++k) r += amp[k] * std::sin(kHarmonics[k] * theta + phase[k]);
    return radius * r;
  }
  double max_radius() const { return radius * (1.0 + amp[0] + amp[1] + amp[2]); }
};

/// Bilinearly interpolated lattice noise with smoothstep weights.
class ValueNoise {
 public:
  ValueNoise(int width, int height, int spacing, std::uint64_t seed)
      : spacing_(spacing), nx_(width / spacing + 2), ny_(height / spacing + 2) {
    values_.resize(static_cast<std::size_t>(nx_) * ny_);
    for (std::size_t i = 0; i < values_.size(); ++i) {
      values_[i] = static_cast<double>(splitmix64(seed + i) >> 11) * 0x1.0p-53;
    }
  }

  double at(int x, int y) const {
    const int ix = x / spacing_;
    const int iy = y / spacing_;
    const double fx = smooth(static_cast<double>(x % spacing_) / spacing_);
    const double fy = smooth(static_cast<double>(y % spacing_) / spacing_);
    const double v00 = values_[static_cast<std::size_t>(iy) * nx_ + ix];
    const double v10 = values_[static_cast<std::size_t>(iy) * nx_ + ix + 1];
    const double v01 = values_[static_cast<std::size_t>(iy + 1) * nx_ + ix];
    const double v11 = values_[static_cast<std::size_t>(iy + 1) * nx_ + ix + 1];
    return (v00 * (1 - fx) + v10 * fx) * (1 - fy) + (v01 * (1 - fx) + v11 * fx) * fy;
  }

 private:
  static double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

  int spacing_;
  int nx_;
  int ny_;
  std::vector<double> values_;
};

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

Rgb tissue_color(const ValueNoise& coarse, const ValueNoise& fine, const ValueNoise& nuclei,
                 int x, int y) {
  const double t = 0.65 * coarse.at(x, y) + 0.35 * fine.at(x, y);
  double r = 242 - 46 * t;
  double g = 178 - 70 * t;
  double b = 212 - 52 * t;
  const double n = nuclei.at(x, y);
  if (n > 0.72) {
    // Hematoxylin-like dark purple spots.
    const double k = std::min(1.0, (n - 0.72) / 0.12);
    r += (110 - r) * k;
    g += (62 - g) * k;
    b += (150 - b) * k;
  }
  return {to_byte(r), to_byte(g), to_byte(b)};
}

struct ArcSplit {
  // Index ranges into the sampled boundary, inclusive, walking forward
  // modulo the sample count.
  std::size_t cautery_begin = 0;
  std::size_t cautery_end = 0;
};

PixelPoint clamp_point(double x, double y, int width, int height) {
  return {std::clamp<std::int64_t>(std::llround(x), 0, width - 1),
          std::clamp<std::int64_t>(std::llround(y), 0, height - 1)};
}

// Polyline over sample indices [begin, begin + count] (mod n), dropping
// repeated consecutive points.
std::vector<PixelPoint> take_run(const std::vector<PixelPoint>& ring, std::size_t begin,
                                 std::size_t count) {
  std::vector<PixelPoint> pts;
  const std::size_t n = ring.size();
  for (std::size_t k = 0; k <= count; ++k) {
    const PixelPoint& p = ring[(begin + k) % n];
    if (pts.empty() || !(pts.back() == p)) pts.push_back(p);
  }
  return pts;
}

double seg_len(PixelPoint a, PixelPoint b) {
  return std::hypot(static_cast<double>(b.x - a.x), static_cast<double>(b.y - a.y));
}

}  // namespace

void validate(const SyntheticSpec& spec) {
  if (spec.width < kPatchSide || spec.height < kPatchSide) {
    throw Error(ErrorCode::kInvalidSpec, "synthetic slides must be at least 256 pixels");
  }
  if (spec.tissue_blob_count < 1) throw Error(ErrorCode::kInvalidSpec, "need at least one blob");
  if (!(spec.cautery_arc_fraction >= 0.0 && spec.cautery_arc_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidSpec, "cautery_arc_fraction must lie in [0, 1]");
  }
  if (spec.band_width < 4) throw Error(ErrorCode::kInvalidSpec, "band_width must be >= 4");
  if (spec.slide_id.empty()) throw Error(ErrorCode::kInvalidSpec, "slide_id is empty");
}

std::pair<RasterImage, AnnotationSet> synthesize_slide(const SyntheticSpec& spec) {
  validate(spec);
  Rng rng(derive_seed(spec.seed, "synthetic.geometry"));
  const double extent = std::min(spec.width, spec.height);

  std::vector<Blob> blobs;
  {
    Blob main;
    main.radius = 0.33 * extent;
    main.cx = spec.width * 0.5 + rng.uniform(-0.04, 0.04) * extent;
    main.cy = spec.height * 0.5 + rng.uniform(-0.04, 0.04) * extent;
    for (int k = 0; k < 3; ++k) {
      main.amp[k] = rng.uniform(0.01, 0.05);
      main.phase[k] = rng.uniform(0.0, kTwoPi);
    }
    blobs.push_back(main);
  }
  for (int b = 1; b < spec.tissue_blob_count; ++b) {
    bool placed = false;
    for (int attempt = 0; attempt < 500 && !placed; ++attempt) {
      Blob blob;
      blob.radius = rng.uniform(0.06, 0.10) * extent;
      for (int k = 0; k < 3; ++k) {
        blob.amp[k] = rng.uniform(0.01, 0.05);
        blob.phase[k] = rng.uniform(0.0, kTwoPi);
      }
      const double reach = blob.max_radius() + 2;
      blob.cx = rng.uniform(reach, spec.width - reach);
      blob.cy = rng.uniform(reach, spec.height - reach);
      if (reach * 2 >= spec.width || reach * 2 >= spec.height) continue;
      placed = std::all_of(blobs.begin(), blobs.end(), [&](const Blob& o) {
        return std::hypot(o.cx - blob.cx, o.cy - blob.cy) >
               o.max_radius() + blob.max_radius() + kPatchSide;
      });
      if (placed) blobs.push_back(blob);
    }
    if (!placed) {
      throw Error(ErrorCode::kInvalidSpec, "cannot place " +
                                               std::to_string(spec.tissue_blob_count) +
                                               " non-overlapping blobs");
    }
  }

  // Boundaries and the cautery arc of the first blob.
  AnnotationSet annotations{spec.slide_id, 0, {}};
  double arc_start = 0.0;
  double arc_span = 0.0;
  const double f = spec.cautery_arc_fraction;
  for (std::size_t bi = 0; bi < blobs.size(); ++bi) {
    const Blob& blob = blobs[bi];
    const std::size_t n =
        std::max<std::size_t>(64, static_cast<std::size_t>(std::ceil(kTwoPi * blob.max_radius() / 6.0)));
    std::vector<PixelPoint> ring(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double th = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
      const double r = blob.radius_at(th);
      ring[i] = clamp_point(blob.cx + r * std::cos(th), blob.cy + r * std::sin(th), spec.width,
                            spec.height);
    }
    std::vector<double> seg(n);
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      seg[i] = seg_len(ring[i], ring[(i + 1) % n]);
      total += seg[i];
    }
    const std::string prefix = "b" + std::to_string(bi) + "-";
    auto add = [&](const std::string& id, AnnotationClass cls, std::vector<PixelPoint> pts) {
      if (pts.size() >= 2) annotations.annotations.push_back({prefix + id, cls, std::move(pts)});
    };
    // Consumes whole segments starting at `from` until `length` is reached.
    auto walk = [&](std::size_t from, double length, std::size_t limit) {
      std::size_t count = 0;
      double acc = 0;
      while (count < limit && acc + 0.5 * seg[(from + count) % n] < length) {
        acc += seg[(from + count) % n];
        ++count;
      }
      return count;
    };

    if (bi != 0 || f <= 0.0) {
      add("non_cautery", AnnotationClass::kNonCautery, take_run(ring, 0, n));
      continue;
    }
    const std::size_t start = static_cast<std::size_t>(rng.below(n));
    if (f >= 1.0) {
      add("cautery", AnnotationClass::kCautery, take_run(ring, start, n));
      arc_start = 0;
      arc_span = kTwoPi;
      continue;
    }
    const std::size_t c_count = std::max<std::size_t>(1, walk(start, f * total, n - 1));
    const std::size_t rest = n - c_count;
    const double eq_len = std::min(kEquivocalArcFraction * total, 0.25 * (1.0 - f) * total);
    const std::size_t e_count = std::min(walk((start + c_count) % n, eq_len, rest / 3), rest / 3);
    const std::size_t c_end = (start + c_count) % n;
    add("cautery", AnnotationClass::kCautery, take_run(ring, start, c_count));
    if (e_count > 0) {
      add("equivocal-0", AnnotationClass::kEquivocal, take_run(ring, c_end, e_count));
      add("equivocal-1", AnnotationClass::kEquivocal, take_run(ring, (start + n - e_count) % n, e_count));
    }
    add("non_cautery", AnnotationClass::kNonCautery,
        take_run(ring, (c_end + e_count) % n, rest - 2 * e_count));
    arc_start = kTwoPi * static_cast<double>(start) / static_cast<double>(n);
    arc_span = kTwoPi * static_cast<double>(c_count) / static_cast<double>(n);
  }

  // Pixels.
  const std::uint64_t tex_seed = derive_seed(spec.seed, "synthetic.texture");
  const ValueNoise coarse(spec.width, spec.height, 48, tex_seed);
  const ValueNoise fine(spec.width, spec.height, 12, tex_seed ^ 0x1111);
  const ValueNoise nuclei(spec.width, spec.height, 6, tex_seed ^ 0x2222);
  RasterImage img(spec.width, spec.height);

  struct BandPixel {
    int x, y;
  };
  std::vector<BandPixel> band;
  for (std::size_t bi = 0; bi < blobs.size(); ++bi) {
    const Blob& blob = blobs[bi];
    std::vector<double> table(kRadiusTable + 1);
    for (int i = 0; i <= kRadiusTable; ++i) table[i] = blob.radius_at(kTwoPi * i / kRadiusTable);
    const double reach = blob.max_radius() + 1;
    const int x0 = std::max(0, static_cast<int>(std::floor(blob.cx - reach)));
    const int x1 = std::min(spec.width - 1, static_cast<int>(std::ceil(blob.cx + reach)));
    const int y0 = std::max(0, static_cast<int>(std::floor(blob.cy - reach)));
    const int y1 = std::min(spec.height - 1, static_cast<int>(std::ceil(blob.cy + reach)));
    const bool has_band = bi == 0 && arc_span > 0;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - blob.cx;
        const double dy = y - blob.cy;
        const double d = std::hypot(dx, dy);
        double th = std::atan2(dy, dx);
        if (th < 0) th += kTwoPi;
        const double pos = th / kTwoPi * kRadiusTable;
        const int i = std::min(static_cast<int>(pos), kRadiusTable - 1);
        const double r = table[i] + (table[i + 1] - table[i]) * (pos - i);
        if (d > r) continue;
        img.set(x, y, tissue_color(coarse, fine, nuclei, x, y));
        if (has_band && d >= r - spec.band_width) {
          double rel = th - arc_start;
          if (rel < 0) rel += kTwoPi;
          if (arc_span >= kTwoPi || rel <= arc_span) band.push_back({x, y});
        }
      }
    }
  }

  // Cautery band: 5x5 box blur of the tissue, darkened and shifted to purple.
  std::vector<Rgb> smeared(band.size());
  for (std::size_t k = 0; k < band.size(); ++k) {
    int sr = 0, sg = 0, sb = 0, cnt = 0;
    for (int oy = -2; oy <= 2; ++oy) {
      for (int ox = -2; ox <= 2; ++ox) {
        const int x = std::clamp(band[k].x + ox, 0, spec.width - 1);
        const int y = std::clamp(band[k].y + oy, 0, spec.height - 1);
        const Rgb c = img.at(x, y);
        sr += c.r;
        sg += c.g;
        sb += c.b;
        ++cnt;
      }
    }
    const double dark = 0.65;
    smeared[k] = {to_byte(dark * 0.85 * sr / cnt), to_byte(dark * 0.80 * sg / cnt),
                  to_byte(dark * 1.10 * sb / cnt)};
  }
  for (std::size_t k = 0; k < band.size(); ++k) img.set(band[k].x, band[k].y, smeared[k]);

  return {std::move(img), std::move(annotations)};
}

}  // namespace vin
