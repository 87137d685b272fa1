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

#ifndef VIN_ERROR_H_
#define VIN_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace vin {

/// Every failure raised by the library carries one of these codes. The
/// service maps them onto HTTP statuses and the CLI onto exit codes.
enum class ErrorCode {
  kFileNotFound,
  kDecodeError,
  kIoError,
  kInvalidArgument,
  kInvalidFactor,
  kInvalidSpec,
  kInvalidOverlap,
  kInvalidRegionSide,
  kInvalidSigma,
  kEmptyRoi,
  kNoEdgeFound,
  kDegenerate,
  kBadPatchShape,
  kBadMagic,
  kVersionMismatch,
  kTruncatedFile,
  kDimensionMismatch,
  kDuplicateRecord,
  kNonFiniteInput,
  kSingleClassData,
  kEmptyTrainingSet,
  kWrongPatchCount,
  kGeometryMismatch,
  kMisalignedRegions,
  kEmptyMatrix,
  kNoPositives,
  kUnknownSlide,
  kBadWindow,
  kLevelForbiddenInReview,
  kVersionConflict,
  kValidationError,
  kNoInferenceResults,
  kDataRootMissing,
  kBlockLeakage,
};

/// Stable snake_case identifier, used in JSON error bodies.
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vin

#endif  // VIN_ERROR_H_
