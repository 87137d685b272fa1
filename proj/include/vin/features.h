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

/// @file features.h
/// @brief One feature vector per 256x256 patch, plus the on-disk cache.
///
/// Cache layout (little-endian):
///
///   "VINF" | u32 version=1 | u32 D | u64 record_count | u16 n | n bytes id
///   record_count x { u32 region_row | u32 region_col | u8 grid_r | u8 grid_c
///                    | i64 origin_x | i64 origin_y | u8 label | D x f32 }

#ifndef VIN_FEATURES_H_
#define VIN_FEATURES_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vin/annotation.h"
#include "vin/slide_io.h"
#include "vin/tiler.h"

namespace vin {

inline constexpr std::uint32_t kCacheVersion = 1;
inline constexpr int kToyFeatureDim = 64;

struct FeatureRecord {
  RegionId region;
  GridPos grid;
  PixelPoint origin;
  PatchLabel label = PatchLabel::kUnlabeled;
  std::vector<float> vector;
  friend bool operator==(const FeatureRecord&, const FeatureRecord&) = default;
};

struct FeatureCache {
  std::uint32_t dimension = 0;
  std::string extractor_id;
  std::vector<FeatureRecord> records;
  friend bool operator==(const FeatureCache&, const FeatureCache&) = default;
};

/// Interface for anything that maps a patch to one vector. Implementations
/// must be pure so extraction can run on a worker pool.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string id() const = 0;
  virtual int dimension() const = 0;
  virtual std::vector<float> extract(const RasterImage& patch) const = 0;
};

/// Colour histograms, channel moments, gradient histogram and tissue
/// fraction; see extract_toy.
class ToyExtractor final : public FeatureExtractor {
 public:
  std::string id() const override { return "toy-v1"; }
  int dimension() const override { return kToyFeatureDim; }
  std::vector<float> extract(const RasterImage& patch) const override;
};

/// Looks up an extractor by id; only "toy-v1" (alias "toy") is built in.
std::unique_ptr<FeatureExtractor> make_extractor(const std::string& id);

/// Layout of the 64 outputs:
///   [0, 48)  16-bin normalised histogram per RGB channel
///   [48, 54) mean and 2*std per channel, values / 255
///   [54, 62) 8-bin normalised Sobel-magnitude histogram of the luminance
///   62       fraction of non-white pixels
///   63       zero
/// Throws kBadPatchShape unless the patch is 256x256.
std::vector<float> extract_toy(const RasterImage& patch);

/// Sobel-magnitude histogram bin edges (luminance in [0, 1]): bin i covers
/// [i * kGradBinWidth, (i + 1) * kGradBinWidth), the last bin is open.
inline constexpr double kGradBinWidth = 0.06;
/// A pixel counts as tissue when its RGB mean is below this value.
inline constexpr double kWhiteLevel = 0.9 * 255.0;

/// Checks the cache invariants: D > 0, every vector of length D, labels in
/// range, unique (region, grid) keys.
void validate(const FeatureCache& cache);

std::vector<std::uint8_t> encode_cache(const FeatureCache& cache);
FeatureCache decode_cache(std::span<const std::uint8_t> bytes);

void write_cache(const FeatureCache& cache, const std::filesystem::path& path);
/// Throws kBadMagic, kVersionMismatch, kTruncatedFile, kDimensionMismatch or
/// kDuplicateRecord.
FeatureCache read_cache(const std::filesystem::path& path);

/// Loads embeddings computed elsewhere (any D) and stamps `extractor_id`.
FeatureCache import_external(const std::filesystem::path& path, const std::string& extractor_id);

}  // namespace vin

#endif  // VIN_FEATURES_H_
