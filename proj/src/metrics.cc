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

#include "vin/metrics.h"

#include "json.hpp"
#include "vin/error.h"

namespace vin {

void tally(ConfusionMatrix& m, Decision predicted, Decision truth) {
  if (predicted == Decision::kExcluded || truth == Decision::kExcluded) return;
  const bool p = predicted == Decision::kCautery;
  const bool t = truth == Decision::kCautery;
  if (p && t) ++m.tp;
  else if (p && !t) ++m.fp;
  else if (!p && t) ++m.fn;
  else ++m.tn;
}

ConfusionMatrix accumulate(const std::vector<RegionDecision>& decisions,
                           const std::vector<std::pair<RegionId, Decision>>& truths) {
  if (decisions.size() != truths.size()) {
    throw Error(ErrorCode::kMisalignedRegions, "decision and truth lists differ in length");
  }
  ConfusionMatrix m;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    if (!(decisions[i].region == truths[i].first)) {
      throw Error(ErrorCode::kMisalignedRegions,
                  "region mismatch at index " + std::to_string(i));
    }
    tally(m, decisions[i].decision, truths[i].second);
  }
  return m;
}

ConfusionMatrix accumulate_patches(std::span<const PatchLabel> predicted,
                                   std::span<const PatchLabel> truth) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorCode::kMisalignedRegions, "patch lists differ in length");
  }
  auto as_decision = [](PatchLabel l) {
    if (l == PatchLabel::kCautery) return Decision::kCautery;
    if (l == PatchLabel::kNonCautery) return Decision::kNonCautery;
    return Decision::kExcluded;
  };
  ConfusionMatrix m;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    tally(m, as_decision(predicted[i]), as_decision(truth[i]));
  }
  return m;
}

double accuracy(const ConfusionMatrix& m) {
  if (m.total() <= 0) throw Error(ErrorCode::kEmptyMatrix, "confusion matrix is empty");
  return static_cast<double>(m.tp + m.tn) / static_cast<double>(m.total());
}

double fnr(const ConfusionMatrix& m) {
  if (m.tp + m.fn <= 0) throw Error(ErrorCode::kNoPositives, "no positive ground truth");
  return static_cast<double>(m.fn) / static_cast<double>(m.tp + m.fn);
}

std::string metrics_report_json(const ConfusionMatrix& m, const std::string& scope) {
  nlohmann::ordered_json j;
  j["scope"] = scope;
  j["tp"] = m.tp;
  j["fp"] = m.fp;
  j["tn"] = m.tn;
  j["fn"] = m.fn;
  j["accuracy"] = m.total() > 0 ? nlohmann::ordered_json(accuracy(m)) : nullptr;
  j["fnr"] = m.tp + m.fn > 0 ? nlohmann::ordered_json(fnr(m)) : nullptr;
  return j.dump(2);
}

}  // namespace vin
