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

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.h"
#include "vin/binary_io.h"
#include "vin/rng.h"
#include "vin/slide_io.h"

namespace vin {
namespace {

using testing::TempDir;

RasterImage random_image(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  RasterImage img(w, h);
  for (auto& b : img.mutable_pixels()) b = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

// Tent-filter oracle: sums every source pixel weighted by
// max(0, 1 - |s - i|) per axis, with the sample point clamped to the image.
double tent_oracle(const RasterImage& img, int factor, int ox, int oy, int ch) {
  const double sx = std::clamp((ox + 0.5) * factor - 0.5, 0.0, img.width() - 1.0);
  const double sy = std::clamp((oy + 0.5) * factor - 0.5, 0.0, img.height() - 1.0);
  double acc = 0.0;
  for (int y = 0; y < img.height(); ++y) {
    const double wy = std::max(0.0, 1.0 - std::abs(sy - y));
    if (wy == 0.0) continue;
    for (int x = 0; x < img.width(); ++x) {
      const double wx = std::max(0.0, 1.0 - std::abs(sx - x));
      if (wx == 0.0) continue;
      const Rgb p = img.at(x, y);
      const int v = ch == 0 ? p.r : ch == 1 ? p.g : p.b;
      acc += wx * wy * v;
    }
  }
  return acc;
}

TEST(RasterImage, FillAndAccess) {
  RasterImage img(3, 2, Rgb{1, 2, 3});
  EXPECT_EQ(img.pixels().size(), 18u);
  EXPECT_EQ(img.at(2, 1), (Rgb{1, 2, 3}));
  img.set(0, 1, {9, 8, 7});
  EXPECT_EQ(img.at(0, 1), (Rgb{9, 8, 7}));
  EXPECT_EQ(img.row(1)[0], 9);
}

TEST(RasterImage, RejectsBadGeometry) {
  EXPECT_VIN_ERROR(RasterImage(0, 4), ErrorCode::kInvalidArgument);
  EXPECT_VIN_ERROR(RasterImage(2, 2, std::vector<std::uint8_t>(11)), ErrorCode::kInvalidArgument);
}

TEST(Png, RoundTripIsLossless) {
  for (auto [w, h] : {std::pair{1, 1}, {17, 5}, {64, 64}}) {
    const RasterImage img = random_image(w, h, 11);
    EXPECT_EQ(decode_png(encode_png(img)), img);
  }
}

TEST(Png, EncodingIsDeterministic) {
  const RasterImage img = random_image(40, 30, 2);
  EXPECT_EQ(encode_png(img), encode_png(img));
}

TEST(LoadSlide, DimensionsPassThrough) {
  TempDir dir;
  const RasterImage img(4096, 4096, Rgb{240, 200, 220});
  save_png(img, dir / "s.png");
  const auto [m, loaded] = load_slide(dir / "s.png");
  EXPECT_EQ(m.width, 4096);
  EXPECT_EQ(m.height, 4096);
  EXPECT_EQ(m.slide_id, "s");
  EXPECT_EQ(m.block_id, "default");
  EXPECT_EQ(loaded, img);
}

TEST(LoadSlide, SidecarManifestSuppliesIdentity) {
  TempDir dir;
  save_png(RasterImage(8, 8), dir / "x.png");
  SlideManifest m{"slide-7", 8, 8, "x.png", 0.25, "B"};
  write_manifest(m, dir / "x.json");
  const auto [loaded, img] = load_slide(dir / "x.png");
  EXPECT_EQ(loaded.slide_id, "slide-7");
  EXPECT_EQ(loaded.block_id, "B");
  ASSERT_TRUE(loaded.microns_per_pixel.has_value());
  EXPECT_DOUBLE_EQ(*loaded.microns_per_pixel, 0.25);
}

TEST(LoadSlide, MissingFile) {
  TempDir dir;
  EXPECT_VIN_ERROR(load_slide(dir / "absent.png"), ErrorCode::kFileNotFound);
}

TEST(LoadSlide, TruncatedFileIsDecodeError) {
  TempDir dir;
  const auto bytes = encode_png(random_image(64, 64, 5));
  const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + bytes.size() / 2);
  write_file_atomic(dir / "t.png", cut);
  EXPECT_VIN_ERROR(load_slide(dir / "t.png"), ErrorCode::kDecodeError);
}

TEST(LoadSlide, GarbageIsDecodeError) {
  const std::vector<std::uint8_t> junk = {'n', 'o', 't', ' ', 'p', 'n', 'g', 0, 1, 2};
  EXPECT_VIN_ERROR(decode_png(junk), ErrorCode::kDecodeError);
}

TEST(Manifest, JsonRoundTrip) {
  SlideManifest m{"a", 100, 50, "slides/a.png", std::nullopt, "A"};
  const SlideManifest back = manifest_from_json(manifest_to_json(m));
  EXPECT_EQ(back.slide_id, "a");
  EXPECT_EQ(back.width, 100);
  EXPECT_EQ(back.height, 50);
  EXPECT_EQ(back.source_path, "slides/a.png");
  EXPECT_FALSE(back.microns_per_pixel.has_value());
  EXPECT_EQ(back.block_id, "A");
}

TEST(Manifest, EmptyBlockRejected) {
  SlideManifest m{"a", 100, 50, "a.png", std::nullopt, ""};
  EXPECT_VIN_ERROR(manifest_from_json(manifest_to_json(m)), ErrorCode::kDecodeError);
}

TEST(Downsample, FactorOneIsIdentity) {
  const RasterImage img = random_image(23, 19, 4);
  EXPECT_EQ(downsample_bilinear(img, 1), img);
}

TEST(Downsample, ConstantStaysConstantForEveryFactor) {
  const RasterImage img(37, 29, Rgb{77, 130, 250});
  for (int f = 1; f <= 29; ++f) {
    const RasterImage d = downsample_bilinear(img, f);
    EXPECT_EQ(d.width(), (37 + f - 1) / f);
    EXPECT_EQ(d.height(), (29 + f - 1) / f);
    EXPECT_EQ(d, RasterImage(d.width(), d.height(), Rgb{77, 130, 250})) << "factor " << f;
  }
}

TEST(Downsample, BlockImageMatchesTentOracle) {
  RasterImage img(32, 32);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      const std::uint8_t v = ((x / 16) + (y / 16)) % 2 == 0 ? 10 : 200;
      img.set(x, y, {v, v, v});
    }
  }
  const RasterImage d = downsample_bilinear(img, 16);
  ASSERT_EQ(d.width(), 2);
  ASSERT_EQ(d.height(), 2);
  EXPECT_EQ(d.at(0, 0).r, 10);
  EXPECT_EQ(d.at(1, 0).r, 200);
  EXPECT_EQ(d.at(0, 1).r, 200);
  EXPECT_EQ(d.at(1, 1).r, 10);
  for (int y = 0; y < 2; ++y) {
    for (int x = 0; x < 2; ++x) {
      EXPECT_EQ(d.at(x, y).r, std::lround(tent_oracle(img, 16, x, y, 0)));
    }
  }
}

TEST(Downsample, RandomImagesMatchTentOracle) {
  for (int f : {2, 3, 4, 7}) {
    const RasterImage img = random_image(29, 22, static_cast<std::uint64_t>(f));
    const RasterImage d = downsample_bilinear(img, f);
    for (int y = 0; y < d.height(); ++y) {
      for (int x = 0; x < d.width(); ++x) {
        const Rgb p = d.at(x, y);
        const int got[3] = {p.r, p.g, p.b};
        for (int ch = 0; ch < 3; ++ch) {
          EXPECT_NEAR(got[ch], tent_oracle(img, f, x, y, ch), 0.5 + 1e-9)
              << "f=" << f << " at " << x << "," << y;
        }
      }
    }
  }
}

TEST(Downsample, InvalidFactor) {
  const RasterImage img(10, 6);
  EXPECT_VIN_ERROR(downsample_bilinear(img, 0), ErrorCode::kInvalidFactor);
  EXPECT_VIN_ERROR(downsample_bilinear(img, 7), ErrorCode::kInvalidFactor);
  EXPECT_NO_THROW(downsample_bilinear(img, 6));
}

}  // namespace
}  // namespace vin
