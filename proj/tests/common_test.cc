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

#include <atomic>
#include <fstream>
#include <set>
#include <vector>

#include "test_util.h"
#include "vin/binary_io.h"
#include "vin/error.h"
#include "vin/parallel.h"
#include "vin/rng.h"

namespace vin {
namespace {

using testing::TempDir;

TEST(ByteWriter, EmitsLittleEndianRegardlessOfHost) {
  ByteWriter w;
  w.u16(0x0102);
  w.u32(0x01020304u);
  w.u64(0x0102030405060708ull);
  const std::vector<std::uint8_t> expected = {0x02, 0x01, 0x04, 0x03, 0x02, 0x01, 0x08, 0x07,
                                              0x06, 0x05, 0x04, 0x03, 0x02, 0x01};
  EXPECT_EQ(w.data(), expected);
}

TEST(ByteWriter, FloatIsRawBinary32) {
  ByteWriter w;
  w.f32(1.0f);  // 0x3f800000
  const std::vector<std::uint8_t> expected = {0x00, 0x00, 0x80, 0x3f};
  EXPECT_EQ(w.data(), expected);
}

TEST(ByteReader, RoundTripsEveryWidth) {
  ByteWriter w;
  w.u8(0xab);
  w.u16(0xbeef);
  w.u32(0xdeadbeefu);
  w.u64(0x0123456789abcdefull);
  w.i64(-42);
  w.f32(-0.0f);
  w.f32(3.14159f);
  w.bytes("vin");
  ByteReader r(w.data());
  EXPECT_EQ(r.u8(), 0xab);
  EXPECT_EQ(r.u16(), 0xbeef);
  EXPECT_EQ(r.u32(), 0xdeadbeefu);
  EXPECT_EQ(r.u64(), 0x0123456789abcdefull);
  EXPECT_EQ(r.i64(), -42);
  const float nz = r.f32();
  EXPECT_EQ(std::bit_cast<std::uint32_t>(nz), 0x80000000u);
  EXPECT_EQ(r.f32(), 3.14159f);
  EXPECT_EQ(r.bytes(3), "vin");
  EXPECT_EQ(r.remaining(), 0u);
}

TEST(ByteReader, ShortReadIsTruncation) {
  const std::vector<std::uint8_t> three = {1, 2, 3};
  ByteReader r(three);
  EXPECT_VIN_ERROR(r.u32(), ErrorCode::kTruncatedFile);
  ByteReader r2(three);
  EXPECT_VIN_ERROR(r2.bytes(4), ErrorCode::kTruncatedFile);
}

TEST(Files, MissingFileIsFileNotFound) {
  TempDir dir;
  EXPECT_VIN_ERROR(read_file_bytes(dir / "nope.bin"), ErrorCode::kFileNotFound);
}

TEST(Files, AtomicWriteReplacesContentAndLeavesNoTemp) {
  TempDir dir;
  const auto path = dir / "a.txt";
  write_file_atomic(path, std::string_view("first"));
  write_file_atomic(path, std::string_view("second"));
  const auto bytes = read_file_bytes(path);
  EXPECT_EQ(std::string(bytes.begin(), bytes.end()), "second");
  int entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++entries;
  EXPECT_EQ(entries, 1);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(7), b(7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, Mt19937_64ReferenceValue) {
  // The 10000th output of a default-seeded mt19937_64 is fixed by the C++
  // standard; the generator under the helpers must be exactly that engine.
  Rng r(5489u);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = r.next_u64();
  EXPECT_EQ(v, 9981545732273789042ull);
}

TEST(Rng, UniformAndBelowStayInRange) {
  Rng r(1);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const auto k = r.below(7);
    ASSERT_LT(k, 7u);
    seen.insert(k);
  }
  EXPECT_EQ(seen.size(), 7u);
  EXPECT_EQ(r.below(0), 0u);
  EXPECT_EQ(r.below(1), 0u);
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng r(3);
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i;
  r.shuffle(v.begin(), v.end());
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_NE(v, sorted);
}

TEST(Rng, DerivedSeedsSeparateStagesAndIndices) {
  std::set<std::uint64_t> seeds;
  for (const char* stage : {"synth", "train", "split", "init"}) {
    for (std::uint64_t i = 0; i < 16; ++i) seeds.insert(derive_seed(42, stage, i));
  }
  EXPECT_EQ(seeds.size(), 64u);
  EXPECT_EQ(derive_seed(42, "train", 3), derive_seed(42, "train", 3));
  EXPECT_NE(derive_seed(42, "train"), derive_seed(43, "train"));
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  for (int threads : {1, 2, 4}) {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
}

TEST(ParallelFor, RethrowsWorkerException) {
  EXPECT_VIN_ERROR(parallel_for(50, 3,
                                [](std::size_t i) {
                                  if (i == 17) throw Error(ErrorCode::kIoError, "boom");
                                }),
                   ErrorCode::kIoError);
}

TEST(ErrorCodes, NamesAreSnakeCaseAndDistinct) {
  std::set<std::string_view> names;
  for (int c = 0; c <= static_cast<int>(ErrorCode::kBlockLeakage); ++c) {
    const auto name = error_code_name(static_cast<ErrorCode>(c));
    EXPECT_FALSE(name.empty());
    for (char ch : name) EXPECT_TRUE(ch == '_' || (ch >= 'a' && ch <= 'z')) << name;
    names.insert(name);
  }
  EXPECT_EQ(names.size(), static_cast<std::size_t>(ErrorCode::kBlockLeakage) + 1);
  EXPECT_EQ(error_code_name(ErrorCode::kNoEdgeFound), "no_edge_found");
}

}  // namespace
}  // namespace vin
