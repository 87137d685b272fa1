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

#ifndef VIN_METRICS_H_
#define VIN_METRICS_H_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vin/aggregate.h"
#include "vin/annotation.h"

namespace vin {

/// Counts with Cautery as the positive class.
struct ConfusionMatrix {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Adds one (prediction, truth) pair; pairs with an Excluded side are
/// skipped.
void tally(ConfusionMatrix& m, Decision predicted, Decision truth);

/// Region-level matrix. decisions[i] and truths[i] must describe the same
/// region; throws kMisalignedRegions otherwise.
ConfusionMatrix accumulate(const std::vector<RegionDecision>& decisions,
                           const std::vector<std::pair<RegionId, Decision>>& truths);

/// Patch-level matrix; only pairs where both sides are Cautery/NonCautery
/// are counted.
ConfusionMatrix accumulate_patches(std::span<const PatchLabel> predicted,
                                   std::span<const PatchLabel> truth);

/// (TP + TN) / total. Throws kEmptyMatrix.
double accuracy(const ConfusionMatrix& m);
/// FN / (TP + FN). Throws kNoPositives.
double fnr(const ConfusionMatrix& m);

/// {"scope", "tp", "fp", "tn", "fn", "accuracy", "fnr"}; undefined rates are
/// written as null.
std::string metrics_report_json(const ConfusionMatrix& m, const std::string& scope);

}  // namespace vin

#endif  // VIN_METRICS_H_
