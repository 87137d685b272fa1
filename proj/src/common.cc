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

#include <atomic>
#include <fstream>
#include <iterator>

#include "vin/binary_io.h"
#include "vin/error.h"

namespace vin {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFileNotFound: return "file_not_found";
    case ErrorCode::kDecodeError: return "decode_error";
    case ErrorCode::kIoError: return "io_error";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kInvalidFactor: return "invalid_factor";
    case ErrorCode::kInvalidSpec: return "invalid_spec";
    case ErrorCode::kInvalidOverlap: return "invalid_overlap";
    case ErrorCode::kInvalidRegionSide: return "invalid_region_side";
    case ErrorCode::kInvalidSigma: return "invalid_sigma";
    case ErrorCode::kEmptyRoi: return "empty_roi";
    case ErrorCode::kNoEdgeFound: return "no_edge_found";
    case ErrorCode::kDegenerate: return "degenerate";
    case ErrorCode::kBadPatchShape: return "bad_patch_shape";
    case ErrorCode::kBadMagic: return "bad_magic";
    case ErrorCode::kVersionMismatch: return "version_mismatch";
    case ErrorCode::kTruncatedFile: return "truncated_file";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kDuplicateRecord: return "duplicate_record";
    case ErrorCode::kNonFiniteInput: return "non_finite_input";
    case ErrorCode::kSingleClassData: return "single_class_data";
    case ErrorCode::kEmptyTrainingSet: return "empty_training_set";
    case ErrorCode::kWrongPatchCount: return "wrong_patch_count";
    case ErrorCode::kGeometryMismatch: return "geometry_mismatch";
    case ErrorCode::kMisalignedRegions: return "misaligned_regions";
    case ErrorCode::kEmptyMatrix: return "empty_matrix";
    case ErrorCode::kNoPositives: return "no_positives";
    case ErrorCode::kUnknownSlide: return "unknown_slide";
    case ErrorCode::kBadWindow: return "bad_window";
    case ErrorCode::kLevelForbiddenInReview: return "level_forbidden_in_review";
    case ErrorCode::kVersionConflict: return "version_conflict";
    case ErrorCode::kValidationError: return "validation_error";
    case ErrorCode::kNoInferenceResults: return "no_inference_results";
    case ErrorCode::kDataRootMissing: return "data_root_missing";
    case ErrorCode::kBlockLeakage: return "block_leakage";
  }
  return "unknown";
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!std::filesystem::exists(path)) {
      throw Error(ErrorCode::kFileNotFound, "no such file: " + path.string());
    }
    throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes) {
  static std::atomic<unsigned> counter{0};
  auto tmp = path;
  tmp += ".tmp" + std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::kIoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIoError, "cannot rename onto " + path.string());
  }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::span<const std::uint8_t>(
                              reinterpret_cast<const std::uint8_t*>(text.data()),
                              text.size()));
}

}  // namespace vin
