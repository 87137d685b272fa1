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

/// @file slide_io.h
/// @brief Slide rasters, manifests, PNG codec and bilinear downsampling.
///
/// Slides are plain 8-bit RGB rasters. All other modules address pixels in
/// the level-0 frame of a RasterImage; the 16x downsample is the working
/// scale for annotation and overlays.

#ifndef VIN_SLIDE_IO_H_
#define VIN_SLIDE_IO_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vin/error.h"

namespace vin {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Row-major, channel-interleaved 8-bit RGB image.
class RasterImage {
 public:
  static constexpr int kChannels = 3;

  RasterImage() = default;
  /// Allocates a width x height image filled with `fill`.
  RasterImage(int width, int height, Rgb fill = {255, 255, 255});
  /// Adopts `pixels`; its size must equal width * height * 3.
  RasterImage(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::span<std::uint8_t> mutable_pixels() { return pixels_; }

  Rgb at(int x, int y) const {
    const std::size_t i = index(x, y);
    return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t i = index(x, y);
    pixels_[i] = c.r;
    pixels_[i + 1] = c.g;
    pixels_[i + 2] = c.b;
  }
  const std::uint8_t* row(int y) const {
    return pixels_.data() + static_cast<std::size_t>(y) * width_ * kChannels;
  }
  std::uint8_t* row(int y) {
    return pixels_.data() + static_cast<std::size_t>(y) * width_ * kChannels;
  }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

struct SlideManifest {
  std::string slide_id;
  int width = 0;
  int height = 0;
  std::string source_path;
  std::optional<double> microns_per_pixel;
  std::string block_id;
};

/// Decodes an 8-bit RGB PNG. Throws kFileNotFound or kDecodeError.
std::pair<SlideManifest, RasterImage> load_slide(const std::filesystem::path& path);

RasterImage decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const RasterImage& img);
void save_png(const RasterImage& img, const std::filesystem::path& path);

std::string manifest_to_json(const SlideManifest& manifest);
SlideManifest manifest_from_json(const std::string& text);
SlideManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const SlideManifest& manifest, const std::filesystem::path& path);

/// Bilinear resampling with pixel-center alignment and clamped borders.
/// Output is ceil(w / factor) x ceil(h / factor). Sample (ox, oy) reads the
/// source at ((ox + 0.5) * factor - 0.5, (oy + 0.5) * factor - 0.5).
RasterImage downsample_bilinear(const RasterImage& img, int factor);

}  // namespace vin

#endif  // VIN_SLIDE_IO_H_
