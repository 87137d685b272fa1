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

#include "vin/slide_io.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>

#include "json.hpp"
#include "vin/binary_io.h"

namespace vin {

RasterImage::RasterImage(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::kInvalidArgument, "image dimensions must be positive");
  }
  pixels_.resize(static_cast<std::size_t>(width) * height * kChannels);
  for (std::size_t i = 0; i < pixels_.size(); i += kChannels) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
  }
}

RasterImage::RasterImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 1 || height < 1 ||
      pixels_.size() != static_cast<std::size_t>(width) * height * kChannels) {
    throw Error(ErrorCode::kInvalidArgument, "pixel buffer does not match dimensions");
  }
}

namespace {

struct ReadCursor {
  std::span<const std::uint8_t> data;
  std::size_t pos = 0;
};

void png_read_cb(png_structp png, png_bytep out, png_size_t n) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->data.size() - cur->pos < n) png_error(png, "truncated PNG stream");
  std::memcpy(out, cur->data.data() + cur->pos, n);
  cur->pos += n;
}

void png_write_cb(png_structp png, png_bytep in, png_size_t n) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), in, in + n);
}

void png_error_cb(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  *err = msg;
  png_longjmp(png, 1);
}

void png_warning_cb(png_structp, png_const_charp) {}

}  // namespace

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(ErrorCode::kDecodeError, "not a PNG stream");
  }
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_cb,
                                           png_warning_cb);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kDecodeError, "libpng initialisation failed");
  }
  ReadCursor cursor{bytes, 0};
  // State mutated between setjmp and a possible longjmp lives on the heap.
  auto pixels = std::make_unique<std::vector<std::uint8_t>>();
  auto rows = std::make_unique<std::vector<png_bytep>>();
  png_uint_32 w = 0, h = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kDecodeError, "PNG decode failed: " + err);
  }
  png_set_read_fn(png, &cursor, png_read_cb);
  png_read_info(png, info);
  w = png_get_image_width(png, info);
  h = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (bit_depth != 8 || color_type != PNG_COLOR_TYPE_RGB) {
    png_error(png, "only 8-bit RGB PNGs are supported");
  }
  if (png_get_interlace_type(png, info) != PNG_INTERLACE_NONE) {
    png_set_interlace_handling(png);
  }
  png_read_update_info(png, info);
  if (png_get_rowbytes(png, info) != static_cast<png_size_t>(w) * 3) {
    png_error(png, "unexpected row layout");
  }
  pixels->resize(static_cast<std::size_t>(w) * h * 3);
  rows->resize(h);
  for (png_uint_32 y = 0; y < h; ++y) (*rows)[y] = pixels->data() + static_cast<std::size_t>(y) * w * 3;
  png_read_image(png, rows->data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return RasterImage(static_cast<int>(w), static_cast<int>(h), std::move(*pixels));
}

std::vector<std::uint8_t> encode_png(const RasterImage& img) {
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_cb,
                                            png_warning_cb);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIoError, "libpng initialisation failed");
  }
  auto out = std::make_unique<std::vector<std::uint8_t>>();
  auto rows = std::make_unique<std::vector<png_bytep>>(static_cast<std::size_t>(img.height()));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIoError, "PNG encode failed: " + err);
  }
  png_set_write_fn(png, out.get(), png_write_cb, nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
               static_cast<png_uint_32>(img.height()), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 1);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_SUB);
  png_write_info(png, info);
  for (int y = 0; y < img.height(); ++y) {
    (*rows)[static_cast<std::size_t>(y)] = const_cast<png_bytep>(img.row(y));
  }
  png_write_image(png, rows->data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return std::move(*out);
}

void save_png(const RasterImage& img, const std::filesystem::path& path) {
  write_file_atomic(path, encode_png(img));
}

std::pair<SlideManifest, RasterImage> load_slide(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  RasterImage img = decode_png(bytes);
  SlideManifest m;
  m.slide_id = path.stem().string();
  m.width = img.width();
  m.height = img.height();
  m.source_path = path.string();
  m.block_id = "default";
  const auto sidecar = std::filesystem::path(path).replace_extension(".json");
  if (std::filesystem::exists(sidecar)) {
    const SlideManifest stored = read_manifest(sidecar);
    m.slide_id = stored.slide_id;
    m.microns_per_pixel = stored.microns_per_pixel;
    m.block_id = stored.block_id;
  }
  return {m, std::move(img)};
}

std::string manifest_to_json(const SlideManifest& m) {
  nlohmann::json j = {{"slide_id", m.slide_id},
                      {"width", m.width},
                      {"height", m.height},
                      {"source_path", m.source_path},
                      {"block_id", m.block_id}};
  j["microns_per_pixel"] = m.microns_per_pixel ? nlohmann::json(*m.microns_per_pixel)
                                               : nlohmann::json(nullptr);
  return j.dump(2);
}

SlideManifest manifest_from_json(const std::string& text) {
  SlideManifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.slide_id = j.at("slide_id").get<std::string>();
    m.width = j.at("width").get<int>();
    m.height = j.at("height").get<int>();
    m.source_path = j.value("source_path", std::string());
    m.block_id = j.at("block_id").get<std::string>();
    if (j.contains("microns_per_pixel") && !j["microns_per_pixel"].is_null()) {
      m.microns_per_pixel = j["microns_per_pixel"].get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kDecodeError, std::string("manifest: ") + e.what());
  }
  if (m.slide_id.empty() || m.block_id.empty() || m.width < 1 || m.height < 1) {
    throw Error(ErrorCode::kDecodeError, "manifest fields out of range");
  }
  if (m.microns_per_pixel && !(*m.microns_per_pixel > 0)) {
    throw Error(ErrorCode::kDecodeError, "microns_per_pixel must be positive");
  }
  return m;
}

SlideManifest read_manifest(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return manifest_from_json(std::string(bytes.begin(), bytes.end()));
}

void write_manifest(const SlideManifest& manifest, const std::filesystem::path& path) {
  write_file_atomic(path, manifest_to_json(manifest));
}

RasterImage downsample_bilinear(const RasterImage& img, int factor) {
  if (img.empty()) throw Error(ErrorCode::kInvalidArgument, "empty image");
  if (factor < 1 || factor > std::min(img.width(), img.height())) {
    throw Error(ErrorCode::kInvalidFactor, "factor must lie in [1, min(width, height)]");
  }
  if (factor == 1) return img;
  const int ow = (img.width() + factor - 1) / factor;
  const int oh = (img.height() + factor - 1) / factor;

  struct Tap {
    int i0, i1;
    double w1;
  };
  auto taps = [factor](int n_out, int n_in) {
    std::vector<Tap> t(static_cast<std::size_t>(n_out));
    for (int o = 0; o < n_out; ++o) {
      double s = (o + 0.5) * factor - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(n_in - 1));
      const int i0 = static_cast<int>(std::floor(s));
      const int i1 = std::min(i0 + 1, n_in - 1);
      t[static_cast<std::size_t>(o)] = {i0, i1, s - i0};
    }
    return t;
  };
  const auto tx = taps(ow, img.width());
  const auto ty = taps(oh, img.height());

  RasterImage out(ow, oh);
  for (int oy = 0; oy < oh; ++oy) {
    const Tap& vy = ty[static_cast<std::size_t>(oy)];
    const std::uint8_t* r0 = img.row(vy.i0);
    const std::uint8_t* r1 = img.row(vy.i1);
    std::uint8_t* dst = out.row(oy);
    for (int ox = 0; ox < ow; ++ox) {
      const Tap& vx = tx[static_cast<std::size_t>(ox)];
      for (int ch = 0; ch < 3; ++ch) {
        const double a = r0[vx.i0 * 3 + ch] * (1.0 - vx.w1) + r0[vx.i1 * 3 + ch] * vx.w1;
        const double b = r1[vx.i0 * 3 + ch] * (1.0 - vx.w1) + r1[vx.i1 * 3 + ch] * vx.w1;
        const double v = a * (1.0 - vy.w1) + b * vy.w1;
        dst[ox * 3 + ch] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

}  // namespace vin
