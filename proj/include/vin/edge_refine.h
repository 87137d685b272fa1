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

/// @file edge_refine.h
/// @brief Semi-automated boundary refinement on the 16x preview.
///
/// A human draws a rough freehand ROI around a tissue edge; the refiner
/// finds high-gradient pixels inside it, closes gaps, keeps the dominant
/// connected piece and traces its outer contour. Pipeline:
///
///   preview --illumination_correct--> enhanced --gray_close--> working image
///   working + ROI --sobel/otsu--> edge map --morph_close--> largest
///   component --Moore trace--> contour (x downsample factor -> level 0)

#ifndef VIN_EDGE_REFINE_H_
#define VIN_EDGE_REFINE_H_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "vin/slide_io.h"
#include "vin/tiler.h"

namespace vin {

/// Single-channel double image, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Illumination-corrected luminance, every value in [0, 1].
using EnhancedImage = GrayImage;

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;  // 0 or 1

  BinaryMask() = default;
  BinaryMask(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0) {}

  bool at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) {
    values[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
  }
  std::size_t count() const;
  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

struct Point2i {
  int x = 0;
  int y = 0;
  friend auto operator<=>(const Point2i&, const Point2i&) = default;
};

/// Freehand ROI in the downsampled frame, implicitly closed.
struct RoiPolygon {
  std::vector<Point2i> points;
};

struct RefineParams {
  double blur_sigma = 20.0;
  int close_radius = 3;
  int downsample_factor = 16;
};

/// Unweighted RGB mean scaled to [0, 1].
GrayImage luminance(const RasterImage& img);

/// Separable Gaussian, radius ceil(3 sigma), unit-sum kernel, clamped borders.
GrayImage gaussian_blur(const GrayImage& img, double sigma);

/// out = clamp(L / max(1/255, blur(L, sigma)), 0, 2) / 2.
/// Throws kInvalidSigma unless sigma > 0.
EnhancedImage illumination_correct(const RasterImage& img, double sigma);
EnhancedImage illumination_correct(const GrayImage& lum, double sigma);

/// {(dx, dy) : dx^2 + dy^2 <= radius^2}.
std::vector<Point2i> disk_offsets(int radius);

/// Binary dilation / erosion with a disk. Outside the image counts as
/// background for dilation and as foreground for erosion, which keeps the
/// closing extensive and idempotent up to the image border.
BinaryMask dilate(const BinaryMask& mask, int radius);
BinaryMask erode(const BinaryMask& mask, int radius);
BinaryMask morph_close(const BinaryMask& mask, int radius);

/// Grayscale closing (max filter then min filter over the disk).
GrayImage gray_close(const GrayImage& img, int radius);

/// 3x3 Sobel gradient magnitude with clamped borders.
GrayImage sobel_magnitude(const GrayImage& img);

/// Otsu over a 256-bin histogram (bin = round(v * 255)). Returns t = k / 255
/// for the smallest cut k maximising between-class variance; foreground is
/// bin > k. Throws kDegenerate when fewer than two values or a single
/// occupied bin.
double otsu_threshold(std::span<const double> values);

/// Even-odd fill evaluated at integer pixel coordinates.
BinaryMask rasterize_polygon(const RoiPolygon& roi, int width, int height);

/// Largest 8-connected component; ties go to the component whose first
/// pixel comes first in raster order.
BinaryMask largest_component(const BinaryMask& mask);

/// Moore-neighbour trace of the outer boundary of the component containing
/// the first foreground pixel in raster order, clockwise on screen, with
/// Jacob's stopping criterion. The first point is repeated at the end.
std::vector<Point2i> trace_contour(const BinaryMask& mask);

/// Full refinement on an already-enhanced preview. Returns a closed
/// level-0 contour. Throws kEmptyRoi or kNoEdgeFound.
std::vector<PixelPoint> refine_roi(const EnhancedImage& enhanced, const RoiPolygon& roi,
                                   const RefineParams& params);

/// Working image for the interactive tool: the illumination-corrected
/// preview after a grayscale closing with disk(close_radius).
EnhancedImage prepare_preview(const RasterImage& preview, const RefineParams& params);

}  // namespace vin

#endif  // VIN_EDGE_REFINE_H_
