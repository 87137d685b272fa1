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

#include "vin/edge_refine.h"

#include <algorithm>
#include <array>
#include <cmath>

#include "vin/error.h"

namespace vin {

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(values.begin(), values.end(), std::uint8_t{1}));
}

GrayImage luminance(const RasterImage& img) {
  GrayImage out(img.width(), img.height());
  const auto px = img.pixels();
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = (px[3 * i] + px[3 * i + 1] + px[3 * i + 2]) / (3.0 * 255.0);
  }
  return out;
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  if (!(sigma > 0)) throw Error(ErrorCode::kInvalidSigma, "sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[static_cast<std::size_t>(k + radius)] = std::exp(-(k * k) / (2.0 * sigma * sigma));
    sum += kernel[static_cast<std::size_t>(k + radius)];
  }
  for (double& w : kernel) w /= sum;

  GrayImage tmp(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc = 0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + radius)] *
               img.at(std::clamp(x + k, 0, img.width - 1), y);
      }
      tmp.at(x, y) = acc;
    }
  }
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc = 0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + radius)] *
               tmp.at(x, std::clamp(y + k, 0, img.height - 1));
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

EnhancedImage illumination_correct(const GrayImage& lum, double sigma) {
  if (!(sigma > 0)) throw Error(ErrorCode::kInvalidSigma, "sigma must be positive");
  const GrayImage blurred = gaussian_blur(lum, sigma);
  constexpr double kEps = 1.0 / 255.0;
  EnhancedImage out(lum.width, lum.height);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const double ratio = lum.values[i] / std::max(kEps, blurred.values[i]);
    out.values[i] = std::clamp(ratio, 0.0, 2.0) / 2.0;
  }
  return out;
}

EnhancedImage illumination_correct(const RasterImage& img, double sigma) {
  if (!(sigma > 0)) throw Error(ErrorCode::kInvalidSigma, "sigma must be positive");
  return illumination_correct(luminance(img), sigma);
}

std::vector<Point2i> disk_offsets(int radius) {
  std::vector<Point2i> offsets;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy <= radius * radius) offsets.push_back({dx, dy});
    }
  }
  return offsets;
}

namespace {

void check_radius(int radius) {
  if (radius < 1) throw Error(ErrorCode::kInvalidArgument, "structuring radius must be >= 1");
}

}  // namespace

BinaryMask dilate(const BinaryMask& mask, int radius) {
  check_radius(radius);
  const auto disk = disk_offsets(radius);
  BinaryMask out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      for (const auto& o : disk) {
        const int nx = x + o.x;
        const int ny = y + o.y;
        if (nx >= 0 && ny >= 0 && nx < mask.width && ny < mask.height) out.set(nx, ny, true);
      }
    }
  }
  return out;
}

BinaryMask erode(const BinaryMask& mask, int radius) {
  check_radius(radius);
  const auto disk = disk_offsets(radius);
  BinaryMask out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      bool keep = true;
      for (const auto& o : disk) {
        const int nx = x + o.x;
        const int ny = y + o.y;
        if (nx >= 0 && ny >= 0 && nx < mask.width && ny < mask.height && !mask.at(nx, ny)) {
          keep = false;
          break;
        }
      }
      out.set(x, y, keep);
    }
  }
  return out;
}

BinaryMask morph_close(const BinaryMask& mask, int radius) {
  return erode(dilate(mask, radius), radius);
}

GrayImage gray_close(const GrayImage& img, int radius) {
  check_radius(radius);
  const auto disk = disk_offsets(radius);
  auto filter = [&](const GrayImage& src, bool take_max) {
    GrayImage out(src.width, src.height);
    for (int y = 0; y < src.height; ++y) {
      for (int x = 0; x < src.width; ++x) {
        double v = src.at(x, y);
        for (const auto& o : disk) {
          const int nx = x + o.x;
          const int ny = y + o.y;
          if (nx < 0 || ny < 0 || nx >= src.width || ny >= src.height) continue;
          v = take_max ? std::max(v, src.at(nx, ny)) : std::min(v, src.at(nx, ny));
        }
        out.at(x, y) = v;
      }
    }
    return out;
  };
  return filter(filter(img, true), false);
}

GrayImage sobel_magnitude(const GrayImage& img) {
  GrayImage out(img.width, img.height);
  auto px = [&](int x, int y) {
    return img.at(std::clamp(x, 0, img.width - 1), std::clamp(y, 0, img.height - 1));
  };
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
      const double gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
      out.at(x, y) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

double otsu_threshold(std::span<const double> values) {
  if (values.size() < 2) throw Error(ErrorCode::kDegenerate, "Otsu needs at least two values");
  std::array<std::int64_t, 256> hist{};
  for (double v : values) {
    const long bin = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
    ++hist[static_cast<std::size_t>(bin)];
  }
  const auto occupied = std::count_if(hist.begin(), hist.end(), [](auto c) { return c > 0; });
  if (occupied < 2) throw Error(ErrorCode::kDegenerate, "all values fall in one histogram bin");

  double total_sum = 0;
  std::int64_t total = 0;
  for (int i = 0; i < 256; ++i) {
    total_sum += static_cast<double>(i) * static_cast<double>(hist[i]);
    total += hist[i];
  }
  double best = -1;
  int best_cut = 0;
  std::int64_t n0 = 0;
  double s0 = 0;
  for (int k = 0; k < 255; ++k) {
    n0 += hist[k];
    s0 += static_cast<double>(k) * static_cast<double>(hist[k]);
    const std::int64_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const double mu0 = s0 / static_cast<double>(n0);
    const double mu1 = (total_sum - s0) / static_cast<double>(n1);
    const double between =
        static_cast<double>(n0) * static_cast<double>(n1) * (mu0 - mu1) * (mu0 - mu1);
    if (between > best) {
      best = between;
      best_cut = k;
    }
  }
  return best_cut / 255.0;
}

BinaryMask rasterize_polygon(const RoiPolygon& roi, int width, int height) {
  BinaryMask mask(width, height);
  const auto& pts = roi.points;
  if (pts.size() < 3) return mask;
  std::vector<double> xs;
  for (int y = 0; y < height; ++y) {
    xs.clear();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Point2i a = pts[i];
      const Point2i b = pts[(i + 1) % pts.size()];
      // Half-open in y so shared vertices are counted once.
      if ((a.y <= y && b.y > y) || (b.y <= y && a.y > y)) {
        xs.push_back(a.x + static_cast<double>(y - a.y) * (b.x - a.x) / (b.y - a.y));
      }
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
      const int x0 = std::max(0, static_cast<int>(std::ceil(xs[i])));
      const int x1 = std::min(width - 1, static_cast<int>(std::floor(xs[i + 1])));
      for (int x = x0; x <= x1; ++x) mask.set(x, y, true);
    }
  }
  return mask;
}

namespace {

constexpr std::array<Point2i, 8> kMoore{{{-1, 0}, {-1, -1}, {0, -1}, {1, -1},
                                         {1, 0},  {1, 1},   {0, 1},  {-1, 1}}};

}  // namespace

BinaryMask largest_component(const BinaryMask& mask) {
  std::vector<int> label(mask.values.size(), -1);
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < mask.values.size(); ++start) {
    if (!mask.values[start] || label[start] >= 0) continue;
    const int id = static_cast<int>(sizes.size());
    std::size_t size = 0;
    stack.push_back(start);
    label[start] = id;
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      ++size;
      const int cx = static_cast<int>(cur % mask.width);
      const int cy = static_cast<int>(cur / mask.width);
      for (const auto& d : kMoore) {
        const int nx = cx + d.x;
        const int ny = cy + d.y;
        if (nx < 0 || ny < 0 || nx >= mask.width || ny >= mask.height) continue;
        const std::size_t ni = static_cast<std::size_t>(ny) * mask.width + nx;
        if (mask.values[ni] && label[ni] < 0) {
          label[ni] = id;
          stack.push_back(ni);
        }
      }
    }
    sizes.push_back(size);
  }
  BinaryMask out(mask.width, mask.height);
  if (sizes.empty()) return out;
  // max_element returns the first maximum, i.e. the earliest-starting one.
  const int keep = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  for (std::size_t i = 0; i < label.size(); ++i) out.values[i] = label[i] == keep ? 1 : 0;
  return out;
}

std::vector<Point2i> trace_contour(const BinaryMask& mask) {
  auto inside = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < mask.width && y < mask.height && mask.at(x, y);
  };
  const auto first = std::find(mask.values.begin(), mask.values.end(), std::uint8_t{1});
  if (first == mask.values.end()) return {};
  const auto idx = static_cast<std::size_t>(first - mask.values.begin());
  const Point2i start{static_cast<int>(idx % mask.width), static_cast<int>(idx / mask.width)};
  const Point2i start_back{start.x - 1, start.y};

  std::vector<Point2i> contour{start};
  Point2i cur = start;
  Point2i back = start_back;
  const std::size_t guard = 4 * mask.values.size() + 8;
  for (std::size_t step = 0; step < guard; ++step) {
    int dir = 0;
    while (!(cur.x + kMoore[dir].x == back.x && cur.y + kMoore[dir].y == back.y)) ++dir;
    bool found = false;
    Point2i prev = back;
    for (int k = 1; k <= 8; ++k) {
      const Point2i d = kMoore[static_cast<std::size_t>((dir + k) % 8)];
      const Point2i cand{cur.x + d.x, cur.y + d.y};
      if (inside(cand.x, cand.y)) {
        back = prev;
        cur = cand;
        found = true;
        break;
      }
      prev = cand;
    }
    if (!found) break;  // isolated pixel
    // Stop once the first move out of the start pixel repeats. Comparing the
    // backtrack instead fails on one-pixel-wide shapes, which are re-entered
    // from a different side.
    if (contour.size() >= 2 && contour.back() == start && cur == contour[1]) return contour;
    contour.push_back(cur);
  }
  contour.push_back(start);
  return contour;
}

std::vector<PixelPoint> refine_roi(const EnhancedImage& enhanced, const RoiPolygon& roi,
                                   const RefineParams& params) {
  if (params.close_radius < 1) {
    throw Error(ErrorCode::kInvalidArgument, "close_radius must be >= 1");
  }
  if (params.downsample_factor < 1) {
    throw Error(ErrorCode::kInvalidArgument, "downsample_factor must be >= 1");
  }
  const BinaryMask roi_mask = rasterize_polygon(roi, enhanced.width, enhanced.height);
  if (roi_mask.count() == 0) throw Error(ErrorCode::kEmptyRoi, "ROI covers no image pixels");

  GrayImage grad = sobel_magnitude(enhanced);
  double peak = 0;
  for (std::size_t i = 0; i < grad.values.size(); ++i) {
    if (!roi_mask.values[i]) grad.values[i] = 0;
    peak = std::max(peak, grad.values[i]);
  }
  if (!(peak > 0)) throw Error(ErrorCode::kNoEdgeFound, "no gradient inside the ROI");

  std::vector<double> masked;
  masked.reserve(roi_mask.count());
  for (std::size_t i = 0; i < grad.values.size(); ++i) {
    if (roi_mask.values[i]) masked.push_back(grad.values[i] / peak);
  }
  double threshold = 0;
  try {
    threshold = otsu_threshold(masked);
  } catch (const Error&) {
    throw Error(ErrorCode::kNoEdgeFound, "masked gradients are indistinguishable");
  }

  BinaryMask edges(enhanced.width, enhanced.height);
  for (std::size_t i = 0; i < grad.values.size(); ++i) {
    const long bin = std::lround(grad.values[i] / peak * 255.0);
    edges.values[i] = roi_mask.values[i] && bin > std::lround(threshold * 255.0) ? 1 : 0;
  }
  const BinaryMask closed = morph_close(edges, params.close_radius);
  const BinaryMask component = largest_component(closed);
  if (component.count() == 0) throw Error(ErrorCode::kNoEdgeFound, "edge map is empty");

  std::vector<PixelPoint> contour;
  for (const auto& p : trace_contour(component)) {
    contour.push_back({static_cast<std::int64_t>(p.x) * params.downsample_factor,
                       static_cast<std::int64_t>(p.y) * params.downsample_factor});
  }
  return contour;
}

EnhancedImage prepare_preview(const RasterImage& preview, const RefineParams& params) {
  return gray_close(illumination_correct(preview, params.blur_sigma), params.close_radius);
}

}  // namespace vin
