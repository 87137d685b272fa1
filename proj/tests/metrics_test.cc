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

#include <algorithm>

#include "json.hpp"

#include "test_util.h"
#include "vin/metrics.h"
#include "vin/rng.h"

namespace vin {
namespace {

RegionDecision dec(int r, int c, Decision d) {
  RegionDecision out;
  out.region = {r, c};
  out.decision = d;
  return out;
}

TEST(Accumulate, Example) {
  const auto C = Decision::kCautery, N = Decision::kNonCautery;
  const std::vector<RegionDecision> d = {dec(0, 0, C), dec(0, 1, C), dec(0, 2, N), dec(0, 3, C)};
  const std::vector<std::pair<RegionId, Decision>> t = {{{0, 0}, C}, {{0, 1}, C}, {{0, 2}, N}, {{0, 3}, N}};
  const ConfusionMatrix m = accumulate(d, t);
  EXPECT_EQ(m, (ConfusionMatrix{2, 1, 1, 0}));
  EXPECT_DOUBLE_EQ(accuracy(m), 0.75);
}

TEST(Accumulate, ExcludedSidesAreSkipped) {
  const auto C = Decision::kCautery, X = Decision::kExcluded;
  EXPECT_EQ(accumulate({dec(0, 0, C), dec(0, 1, C)}, {{{0, 0}, X}, {{0, 1}, X}}), ConfusionMatrix{});
  EXPECT_EQ(accumulate({dec(0, 0, X)}, {{{0, 0}, C}}), ConfusionMatrix{});
}

TEST(Accumulate, Misaligned) {
  EXPECT_VIN_ERROR(accumulate({dec(0, 0, Decision::kCautery)}, {{{0, 1}, Decision::kCautery}}),
                   ErrorCode::kMisalignedRegions);
  EXPECT_VIN_ERROR(accumulate({dec(0, 0, Decision::kCautery)}, {}), ErrorCode::kMisalignedRegions);
}

TEST(Accumulate, PermutationInvariantAndAdditive) {
  Rng rng(17);
  std::vector<RegionDecision> d;
  std::vector<std::pair<RegionId, Decision>> t;
  for (int i = 0; i < 60; ++i) {
    d.push_back(dec(i / 8, i % 8, static_cast<Decision>(rng.below(3))));
    t.push_back({{i / 8, i % 8}, static_cast<Decision>(rng.below(3))});
  }
  const ConfusionMatrix m = accumulate(d, t);
  std::vector<std::size_t> idx(d.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rng.shuffle(idx.begin(), idx.end());
  std::vector<RegionDecision> d2;
  std::vector<std::pair<RegionId, Decision>> t2;
  for (auto i : idx) {
    d2.push_back(d[i]);
    t2.push_back(t[i]);
  }
  EXPECT_EQ(accumulate(d2, t2), m);
  ConfusionMatrix halves = accumulate({d.begin(), d.begin() + 30}, {t.begin(), t.begin() + 30});
  halves += accumulate({d.begin() + 30, d.end()}, {t.begin() + 30, t.end()});
  EXPECT_EQ(halves, m);
}

TEST(Rates, Examples) {
  EXPECT_DOUBLE_EQ(accuracy(ConfusionMatrix{0, 0, 10, 0}), 1.0);
  EXPECT_DOUBLE_EQ(fnr(ConfusionMatrix{3, 0, 0, 1}), 0.25);
  EXPECT_DOUBLE_EQ(fnr(ConfusionMatrix{5, 2, 1, 0}), 0.0);
  EXPECT_VIN_ERROR(accuracy(ConfusionMatrix{}), ErrorCode::kEmptyMatrix);
  EXPECT_VIN_ERROR(fnr(ConfusionMatrix{0, 4, 4, 0}), ErrorCode::kNoPositives);
}

TEST(Rates, IdentitiesOnRandomMatrices) {
  Rng rng(71);
  for (int i = 0; i < 1000; ++i) {
    ConfusionMatrix m{static_cast<std::int64_t>(rng.below(50)), static_cast<std::int64_t>(rng.below(50)),
                      static_cast<std::int64_t>(rng.below(50)), static_cast<std::int64_t>(rng.below(50))};
    if (m.total() > 0) {
      // Exact in binary: both fractions share the denominator.
      const double err = static_cast<double>(m.fp + m.fn) / static_cast<double>(m.total());
      EXPECT_NEAR(accuracy(m) + err, 1.0, 1e-15);
    }
    if (m.tp + m.fn > 0) {
      const double f = fnr(m);
      EXPECT_GE(f, 0.0);
      EXPECT_LE(f, 1.0);
      EXPECT_EQ(f == 0.0, m.fn == 0);
    }
  }
}

TEST(Patches, OnlyBinaryPairsCount) {
  const auto C = PatchLabel::kCautery, N = PatchLabel::kNonCautery, E = PatchLabel::kEquivocal,
             U = PatchLabel::kUnlabeled;
  const std::vector<PatchLabel> pred = {C, C, N, N, E, C, U};
  const std::vector<PatchLabel> truth = {C, N, C, N, C, U, C};
  EXPECT_EQ(accumulate_patches(pred, truth), (ConfusionMatrix{1, 1, 1, 1}));
  EXPECT_VIN_ERROR(accumulate_patches(pred, std::vector<PatchLabel>{C}), ErrorCode::kMisalignedRegions);
}

TEST(Report, JsonFieldsAndNulls) {
  const auto j = nlohmann::json::parse(metrics_report_json(ConfusionMatrix{2, 1, 1, 0}, "region"));
  EXPECT_EQ(j["scope"], "region");
  EXPECT_EQ(j["tp"], 2);
  EXPECT_EQ(j["accuracy"], 0.75);
  EXPECT_EQ(j["fnr"], 0.0);
  const auto e = nlohmann::json::parse(metrics_report_json(ConfusionMatrix{}, "patch"));
  EXPECT_TRUE(e["accuracy"].is_null());
  EXPECT_TRUE(e["fnr"].is_null());
}

}  // namespace
}  // namespace vin
