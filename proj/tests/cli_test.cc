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

// Drives the vin executable as a subprocess and checks exit codes, streams
// and on-disk artifacts.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "test_util.h"
#include "vin/binary_io.h"

namespace vin {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using testing::TempDir;

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const TempDir& dir, const std::string& args) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string("'") + VIN_CLI_PATH + "' " + args + " >'" + out.string() +
                          "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

TEST(Cli, UsageErrorsExitTwo) {
  TempDir dir;
  RunResult r = run_cli(dir, "");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run_cli(dir, "frobnicate").code, 2);
  EXPECT_EQ(run_cli(dir, "synth --no-such-flag").code, 2);
  EXPECT_EQ(run_cli(dir, "eval --scope slide").code, 2);
  EXPECT_EQ(run_cli(dir, "eval --pred x.json").code, 2);
}

TEST(Cli, HelpExitsZero) {
  TempDir dir;
  const RunResult r = run_cli(dir, "--help");
  EXPECT_EQ(r.code, 0);
  for (const char* sub : {"synth", "tile", "rasterize", "extract", "train", "infer", "vote", "stitch",
                          "eval", "render", "serve"}) {
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
  }
}

TEST(Cli, OperationalErrorsExitOne) {
  TempDir dir;
  RunResult r = run_cli(dir, "--data '" + (dir / "missing").string() + "' tile");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("data_root_missing"), std::string::npos);
  std::ofstream(dir / "junk.vinf") << "not a cache";
  r = run_cli(dir, "train --cache '" + (dir / "junk.vinf").string() + "' --out '" +
                       (dir / "m.vinm").string() + "'");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("bad_magic"), std::string::npos);
}

TEST(Cli, SynthTwiceIsByteIdentical) {
  TempDir dir;
  const std::string common = "--seed 42 synth --slides 2 --blocks 2 --width 4096 --height 4096 --band-width 64 --out ";
  ASSERT_EQ(run_cli(dir, common + "'" + (dir / "a").string() + "'").code, 0);
  ASSERT_EQ(run_cli(dir, common + "'" + (dir / "b").string() + "'").code, 0);
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), dir / "a");
    EXPECT_EQ(read_file_bytes(e.path()), read_file_bytes(dir / "b" / rel)) << rel;
  }
  EXPECT_TRUE(fs::exists(dir / "a" / "slides" / "slide-001.json"));
}

TEST(Cli, FullPipelineWithBlockChecks) {
  TempDir dir;
  const std::string data = "--data '" + (dir / "d").string() + "' ";
  ASSERT_EQ(run_cli(dir, data + "synth --slides 4 --blocks 2 --width 6000 --height 6000 --band-width 64").code, 0);
  for (const char* stage : {"tile", "rasterize", "extract"}) {
    const RunResult r = run_cli(dir, data + stage);
    ASSERT_EQ(r.code, 0) << stage << ": " << r.err;
  }
  const std::string cache = "'" + (dir / "d" / "features" / "slide-000.vinf").string() + "'";
  RunResult r = run_cli(dir, data + "train --cache " + cache + " --epochs 0");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("empty_training_set"), std::string::npos);

  r = run_cli(dir, data + "train --blocks A --epochs 30");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(r.out);
  EXPECT_TRUE(report.contains("best_val_accuracy"));

  r = run_cli(dir, data + "infer --blocks A");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("block_leakage"), std::string::npos);
  ASSERT_EQ(run_cli(dir, data + "infer --blocks B").code, 0);
  ASSERT_EQ(run_cli(dir, data + "vote").code, 0);
  ASSERT_EQ(run_cli(dir, data + "stitch").code, 0);
  ASSERT_EQ(run_cli(dir, data + "render").code, 0);
  EXPECT_TRUE(fs::exists(dir / "d" / "overlays" / "slide-002.png"));
  EXPECT_TRUE(fs::exists(dir / "d" / "margins" / "slide-003.json"));

  r = run_cli(dir, data + "eval --blocks B --out '" + (dir / "report.json").string() + "'");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto metrics = json::parse(r.out);
  EXPECT_EQ(metrics["scope"], "region");
  EXPECT_EQ(json::parse(slurp(dir / "report.json")), metrics);

  // Once block A has decisions, evaluating it is refused unless allowed.
  ASSERT_EQ(run_cli(dir, data + "infer --blocks A --allow-training-blocks").code, 0);
  ASSERT_EQ(run_cli(dir, data + "vote").code, 0);
  r = run_cli(dir, data + "eval --blocks A");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("block_leakage"), std::string::npos);
  EXPECT_EQ(run_cli(dir, data + "eval --blocks A --allow-training-blocks").code, 0);

  // Single-file mode.
  const std::string pred = "'" + (dir / "d" / "regions" / "slide-002.json").string() + "'";
  const std::string truth = "'" + (dir / "d" / "labels" / "slide-002.json").string() + "'";
  r = run_cli(dir, "eval --pred " + pred + " --truth " + truth);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto single = json::parse(r.out);
  for (const char* k : {"tp", "fp", "tn", "fn", "accuracy", "fnr"}) EXPECT_TRUE(single.contains(k)) << k;
  const std::string ppred = "'" + (dir / "d" / "predictions" / "slide-002.json").string() + "'";
  r = run_cli(dir, "eval --scope patch --pred " + ppred + " --truth " + truth);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["scope"], "patch");
}

TEST(Cli, ImportExternalCache) {
  TempDir dir;
  const std::string data = "--data '" + (dir / "d").string() + "' ";
  // A 384-wide cache written by hand through the library format.
  ByteWriter w;
  w.bytes("VINF");
  w.u32(1);
  w.u32(384);
  w.u64(1);
  w.u16(3);
  w.bytes("ext");
  w.u32(0);
  w.u32(0);
  w.u8(0);
  w.u8(1);
  w.i64(0);
  w.i64(256);
  w.u8(1);
  for (int i = 0; i < 384; ++i) w.f32(static_cast<float>(i));
  write_file_atomic(dir / "ext.vinf", w.data());
  const RunResult r = run_cli(dir, data + "extract --import '" + (dir / "ext.vinf").string() +
                                       "' --slide s1 --extractor-id uni-384");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto b = read_file_bytes(dir / "d" / "features" / "s1.vinf");
  EXPECT_EQ(std::string(b.begin() + 22, b.begin() + 29), "uni-384");
}

}  // namespace
}  // namespace vin
