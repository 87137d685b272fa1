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

#ifndef VIN_SYNTHETIC_H_
#define VIN_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <utility>

#include "vin/annotation.h"
#include "vin/slide_io.h"

namespace vin {

/// Parameters of a synthetic slide: textured tissue blobs on white, the
/// first (largest) blob carrying a cautery band along a contiguous arc.
struct SyntheticSpec {
  int width = 8192;
  int height = 8192;
  int tissue_blob_count = 1;
  double cautery_arc_fraction = 0.5;  // of the first blob's perimeter
  int band_width = 96;                // pixels, measured inward
  std::uint64_t seed = 0;
  std::string slide_id = "synthetic";
};

/// Fraction of the blob perimeter given to each equivocal transition at
/// the two ends of the cautery arc.
inline constexpr double kEquivocalArcFraction = 0.02;

/// Throws kInvalidSpec when the spec is out of range.
void validate(const SyntheticSpec& spec);

/// Pure function of `spec`. The annotation set holds, per blob, the
/// boundary split into cautery / equivocal / non-cautery polylines.
std::pair<RasterImage, AnnotationSet> synthesize_slide(const SyntheticSpec& spec);

}  // namespace vin

#endif  // VIN_SYNTHETIC_H_
