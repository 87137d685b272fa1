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

#include "vin/features.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "vin/binary_io.h"
#include "vin/error.h"

namespace vin {

std::vector<float> extract_toy(const RasterImage& patch) {
  if (patch.width() != kPatchSide || patch.height() != kPatchSide) {
    throw Error(ErrorCode::kBadPatchShape, "toy extractor expects 256x256 patches");
  }
  constexpr int kN = kPatchSide * kPatchSide;
  std::vector<double> f(kToyFeatureDim, 0.0);
  const auto px = patch.pixels();

  double sum[3] = {0, 0, 0};
  double sum_sq[3] = {0, 0, 0};
  int tissue = 0;
  // Luminance kept as the integer R+G+B so the Sobel responses are exact.
  std::vector<int> lum(kN);
  for (int i = 0; i < kN; ++i) {
    for (int ch = 0; ch < 3; ++ch) {
      const int v = px[3 * i + ch];
      f[static_cast<std::size_t>(ch * 16 + v / 16)] += 1.0;
      sum[ch] += v;
      sum_sq[ch] += static_cast<double>(v) * v;
    }
    lum[i] = px[3 * i] + px[3 * i + 1] + px[3 * i + 2];
    if (lum[i] < 3 * kWhiteLevel) ++tissue;
  }
  for (int k = 0; k < 48; ++k) f[static_cast<std::size_t>(k)] /= kN;
  for (int ch = 0; ch < 3; ++ch) {
    const double mean = sum[ch] / kN;
    const double var = std::max(0.0, sum_sq[ch] / kN - mean * mean);
    f[static_cast<std::size_t>(48 + 2 * ch)] = mean / 255.0;
    f[static_cast<std::size_t>(49 + 2 * ch)] = std::min(1.0, 2.0 * std::sqrt(var) / 255.0);
  }

  auto at = [&](int x, int y) {
    return lum[static_cast<std::size_t>(std::clamp(y, 0, kPatchSide - 1)) * kPatchSide +
               std::clamp(x, 0, kPatchSide - 1)];
  };
  for (int y = 0; y < kPatchSide; ++y) {
    for (int x = 0; x < kPatchSide; ++x) {
      const long gx = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1)) -
                      (at(x - 1, y - 1) + 2 * at(x - 1, y) + at(x - 1, y + 1));
      const long gy = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1)) -
                      (at(x - 1, y - 1) + 2 * at(x, y - 1) + at(x + 1, y - 1));
      const double mag = std::sqrt(static_cast<double>(gx * gx + gy * gy)) / (3.0 * 255.0);
      const int bin = std::min(7, static_cast<int>(mag / kGradBinWidth));
      f[static_cast<std::size_t>(54 + bin)] += 1.0;
    }
  }
  for (int k = 54; k < 62; ++k) f[static_cast<std::size_t>(k)] /= kN;
  f[62] = static_cast<double>(tissue) / kN;

  std::vector<float> out(f.begin(), f.end());
  return out;
}

std::vector<float> ToyExtractor::extract(const RasterImage& patch) const {
  return extract_toy(patch);
}

std::unique_ptr<FeatureExtractor> make_extractor(const std::string& id) {
  if (id == "toy" || id == "toy-v1") return std::make_unique<ToyExtractor>();
  throw Error(ErrorCode::kInvalidArgument, "unknown feature extractor '" + id + "'");
}

void validate(const FeatureCache& cache) {
  if (cache.dimension == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "feature dimension must be positive");
  }
  if (cache.extractor_id.size() > 0xffff) {
    throw Error(ErrorCode::kInvalidArgument, "extractor id too long");
  }
  std::set<std::pair<RegionId, GridPos>> keys;
  for (const auto& r : cache.records) {
    if (r.vector.size() != cache.dimension) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "record has " + std::to_string(r.vector.size()) + " values, header says " +
                      std::to_string(cache.dimension));
    }
    if (static_cast<int>(r.label) > 3) throw Error(ErrorCode::kDecodeError, "label out of range");
    if (r.grid.r < 0 || r.grid.r >= kGridDim || r.grid.c < 0 || r.grid.c >= kGridDim ||
        r.region.row < 0 || r.region.col < 0) {
      throw Error(ErrorCode::kDecodeError, "record position out of range");
    }
    if (!keys.insert({r.region, r.grid}).second) {
      throw Error(ErrorCode::kDuplicateRecord, "duplicate (region, grid) record");
    }
  }
}

std::vector<std::uint8_t> encode_cache(const FeatureCache& cache) {
  validate(cache);
  ByteWriter w;
  w.bytes("VINF");
  w.u32(kCacheVersion);
  w.u32(cache.dimension);
  w.u64(cache.records.size());
  w.u16(static_cast<std::uint16_t>(cache.extractor_id.size()));
  w.bytes(cache.extractor_id);
  for (const auto& r : cache.records) {
    w.u32(static_cast<std::uint32_t>(r.region.row));
    w.u32(static_cast<std::uint32_t>(r.region.col));
    w.u8(static_cast<std::uint8_t>(r.grid.r));
    w.u8(static_cast<std::uint8_t>(r.grid.c));
    w.i64(r.origin.x);
    w.i64(r.origin.y);
    w.u8(static_cast<std::uint8_t>(r.label));
    for (float v : r.vector) w.f32(v);
  }
  return w.data();
}

FeatureCache decode_cache(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (bytes.size() < 4 || r.bytes(4) != "VINF") {
    throw Error(ErrorCode::kBadMagic, "not a feature cache (magic mismatch)");
  }
  const std::uint32_t version = r.u32();
  if (version != kCacheVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "feature cache version " + std::to_string(version) + " is not supported");
  }
  FeatureCache cache;
  cache.dimension = r.u32();
  if (cache.dimension == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "feature dimension must be positive");
  }
  const std::uint64_t count = r.u64();
  cache.extractor_id = r.bytes(r.u16());
  const std::uint64_t record_bytes = 4 + 4 + 1 + 1 + 8 + 8 + 1 + 4ULL * cache.dimension;
  if (count > r.remaining() / record_bytes) {
    throw Error(ErrorCode::kTruncatedFile, "feature cache shorter than its record count");
  }
  cache.records.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t i = 0; i < count; ++i) {
    FeatureRecord rec;
    rec.region.row = static_cast<int>(r.u32());
    rec.region.col = static_cast<int>(r.u32());
    rec.grid.r = r.u8();
    rec.grid.c = r.u8();
    rec.origin.x = r.i64();
    rec.origin.y = r.i64();
    const std::uint8_t label = r.u8();
    if (label > 3) throw Error(ErrorCode::kDecodeError, "label byte out of range");
    rec.label = static_cast<PatchLabel>(label);
    rec.vector.resize(cache.dimension);
    for (auto& v : rec.vector) v = r.f32();
    cache.records.push_back(std::move(rec));
  }
  if (r.remaining() != 0) throw Error(ErrorCode::kDecodeError, "trailing bytes after records");
  validate(cache);
  return cache;
}

void write_cache(const FeatureCache& cache, const std::filesystem::path& path) {
  write_file_atomic(path, encode_cache(cache));
}

FeatureCache read_cache(const std::filesystem::path& path) {
  return decode_cache(read_file_bytes(path));
}

FeatureCache import_external(const std::filesystem::path& path, const std::string& extractor_id) {
  FeatureCache cache = read_cache(path);
  cache.extractor_id = extractor_id;
  return cache;
}

}  // namespace vin
