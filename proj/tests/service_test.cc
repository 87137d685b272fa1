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

#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "test_util.h"
#include "vin/binary_io.h"
#include "vin/service.h"

namespace vin {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using testing::TempDir;

// A data root with one 4096 x 4096 synthetic slide ("tissue") and one flat
// slide ("flat") without annotations.
class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const DataLayout l(dir_.path());
    SyntheticSpec spec;
    spec.width = spec.height = 4096;
    spec.band_width = 64;
    spec.seed = 5;
    spec.slide_id = "tissue";
    write_synthetic_slide(l, spec, "A");
    annotations_ = read_annotations(l.annotations("tissue"));
    const RasterImage flat(1024, 1024, Rgb{180, 150, 170});
    save_png(flat, l.slide_png("flat"));
    write_manifest(SlideManifest{"flat", 1024, 1024, "slides/flat.png", std::nullopt, "A"}, l.manifest("flat"));
    service_ = std::make_unique<AnnotateService>(ServiceOptions{dir_.path(), {}, 2});
  }

  // A level-16 ROI square of half-width `r` centred on a level-0 point.
  static json roi_around(PixelPoint p, int r) {
    const int cx = static_cast<int>(p.x / 16), cy = static_cast<int>(p.y / 16);
    return json::array({{cx - r, cy - r}, {cx + r, cy - r}, {cx + r, cy + r}, {cx - r, cy + r}});
  }
  PixelPoint boundary_point() const {
    const auto& pts = annotations_.annotations.front().points;
    return pts[pts.size() / 2];
  }

  TempDir dir_;
  AnnotationSet annotations_;
  std::unique_ptr<AnnotateService> service_;
};

TEST_F(ServiceTest, ListSlidesSortedWithSummaries) {
  const Response r = service_->handle_list();
  EXPECT_EQ(r.status, 200);
  const auto j = json::parse(r.body);
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[0]["slide_id"], "flat");
  EXPECT_EQ(j[1]["slide_id"], "tissue");
  EXPECT_EQ(j[1]["width"], 4096);
  EXPECT_EQ(j[1]["block_id"], "A");
}

TEST(Service, EmptyAndMissingDataRoot) {
  TempDir dir;
  AnnotateService empty(ServiceOptions{dir.path(), {}, 1});
  const Response r = empty.handle_list();
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body, "[]");
  AnnotateService missing(ServiceOptions{dir / "nope", {}, 1});
  const Response m = missing.handle_list();
  EXPECT_EQ(m.status, 503);
  EXPECT_EQ(json::parse(m.body)["error"], "data_root_missing");
}

TEST_F(ServiceTest, ViewAtLevel16MatchesOfflinePreview) {
  const RasterImage full = service_->get_view("tissue", 0, 0, 256, 256, 16, false);
  const auto [m, slide] = load_slide(dir_ / "slides/tissue.png");
  EXPECT_EQ(full, downsample_bilinear(slide, 16));
  const RasterImage part = service_->get_view("tissue", 100, 50, 40, 30, 16, true);
  EXPECT_EQ(part, crop(full, {100, 50}, 40, 30));
  // Border windows are white-padded.
  const RasterImage edge = service_->get_view("tissue", 250, 250, 10, 10, 16, false);
  EXPECT_EQ(edge.at(9, 9), (Rgb{255, 255, 255}));
  const RasterImage l1 = service_->get_view("tissue", 1000, 1000, 64, 32, 1, false);
  EXPECT_EQ(l1, crop(slide, {1000, 1000}, 64, 32));
}

TEST_F(ServiceTest, ViewHandlerStatuses) {
  using Q = std::map<std::string, std::string>;
  const Q ok{{"x", "0"}, {"y", "0"}, {"w", "256"}, {"h", "256"}, {"level", "16"}};
  Response r = service_->handle_view("tissue", ok);
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.content_type, "image/png");
  EXPECT_EQ(decode_png(std::vector<std::uint8_t>(r.body.begin(), r.body.end())).width(), 256);

  EXPECT_EQ(service_->handle_view("ghost", ok).status, 404);
  EXPECT_EQ(json::parse(service_->handle_view("ghost", ok).body)["error"], "unknown_slide");
  EXPECT_EQ(service_->handle_view("../etc", ok).status, 404);

  Q review = ok;
  review["review"] = "1";
  review["level"] = "1";
  r = service_->handle_view("tissue", review);
  EXPECT_EQ(r.status, 403);
  EXPECT_EQ(json::parse(r.body)["error"], "level_forbidden_in_review");
  review["level"] = "16";
  EXPECT_EQ(service_->handle_view("tissue", review).status, 200);

  for (const auto& [k, v] : std::vector<std::pair<std::string, std::string>>{
           {"level", "2"}, {"w", "0"}, {"w", "9000"}, {"x", "256"}, {"x", "abc"}, {"y", "-300"}}) {
    Q bad = ok;
    bad[k] = v;
    EXPECT_EQ(service_->handle_view("tissue", bad).status, 400) << k << "=" << v;
  }
  Q missing = ok;
  missing.erase("w");
  EXPECT_EQ(service_->handle_view("tissue", missing).status, 400);
}

TEST_F(ServiceTest, EnhancedViewIsGreyAndLevel16Only) {
  const RasterImage e = service_->get_view("tissue", 0, 0, 256, 256, 16, false, true);
  for (int y = 0; y < 256; y += 17) {
    for (int x = 0; x < 256; x += 13) {
      const Rgb p = e.at(x, y);
      EXPECT_EQ(p.r, p.g);
      EXPECT_EQ(p.g, p.b);
    }
  }
  EXPECT_VIN_ERROR(service_->get_view("tissue", 0, 0, 64, 64, 4, false, true), ErrorCode::kBadWindow);
}

TEST_F(ServiceTest, RefineReturnsClosedContourNearTheEdge) {
  const PixelPoint p = boundary_point();
  const json body = {{"roi", roi_around(p, 12)},
                     {"params", {{"blur_sigma", 20.0}, {"close_radius", 3}, {"downsample_factor", 16}}}};
  const Response r = service_->handle_refine("tissue", body.dump());
  ASSERT_EQ(r.status, 200) << r.body;
  const auto j = json::parse(r.body);
  EXPECT_EQ(j["slide_id"], "tissue");
  const auto& c = j["contour"];
  ASSERT_GE(c.size(), 3u);
  EXPECT_EQ(c.front(), c.back());
  for (const auto& q : c) {
    EXPECT_LE(std::abs(q[0].get<std::int64_t>() - p.x), (12 + 3 + 1) * 16);
    EXPECT_LE(std::abs(q[1].get<std::int64_t>() - p.y), (12 + 3 + 1) * 16);
  }
  // Refinement is stateless.
  EXPECT_EQ(service_->get_annotations("tissue").version, 0);
}

TEST_F(ServiceTest, RefineFailuresUse422And400) {
  Response r = service_->handle_refine("flat", json{{"roi", {{5, 5}, {50, 5}, {50, 50}, {5, 50}}}}.dump());
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(json::parse(r.body)["error"], "no_edge_found");
  r = service_->handle_refine("tissue", json{{"roi", {{500, 500}, {600, 500}, {600, 600}}}}.dump());
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(json::parse(r.body)["error"], "empty_roi");
  r = service_->handle_refine(
      "tissue", json{{"roi", {{5, 5}, {50, 5}, {50, 50}}}, {"params", {{"blur_sigma", 0.0}}}}.dump());
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(json::parse(r.body)["error"], "invalid_sigma");
  r = service_->handle_refine(
      "tissue", json{{"roi", {{5, 5}, {50, 5}, {50, 50}}}, {"params", {{"downsample_factor", 4}}}}.dump());
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(service_->handle_refine("tissue", "{oops").status, 400);
  EXPECT_EQ(service_->handle_refine("tissue", R"({"roi":[[1,2,3]]})").status, 400);
  EXPECT_EQ(service_->handle_refine("ghost", R"({"roi":[[1,2],[3,4],[5,6]]})").status, 404);
}

TEST_F(ServiceTest, AnnotationsGetPutRoundTrip) {
  Response g = service_->handle_get_annotations("tissue");
  ASSERT_EQ(g.status, 200);
  EXPECT_EQ(annotations_from_json(g.body), annotations_);
  // A slide without a file starts at version 0 with no annotations.
  const auto flat = annotations_from_json(service_->handle_get_annotations("flat").body);
  EXPECT_EQ(flat.version, 0);
  EXPECT_TRUE(flat.annotations.empty());

  const json put = {{"expected_version", 0},
                    {"annotations", {{{"id", "a1"}, {"class", "equivocal"}, {"source", "refined"},
                                      {"points", {{0, 0}, {16, 32}, {48, 48}}}}}}};
  Response p = service_->handle_put_annotations("flat", put.dump());
  ASSERT_EQ(p.status, 200) << p.body;
  EXPECT_EQ(json::parse(p.body)["version"], 1);
  const auto stored = annotations_from_json(service_->handle_get_annotations("flat").body);
  EXPECT_EQ(stored.version, 1);
  ASSERT_EQ(stored.annotations.size(), 1u);
  EXPECT_EQ(stored.annotations[0].cls, AnnotationClass::kEquivocal);
  EXPECT_EQ(stored.annotations[0].source, AnnotationSource::kRefined);
  EXPECT_EQ(read_annotations(dir_ / "annotations/flat.json"), stored);

  // A fresh service sees the persisted state.
  AnnotateService again(ServiceOptions{dir_.path(), {}, 1});
  EXPECT_EQ(again.get_annotations("flat"), stored);
}

TEST_F(ServiceTest, StaleVersionConflictsAndStoreIsUnchanged) {
  const json put = {{"expected_version", 0},
                    {"annotations", {{{"id", "x"}, {"class", "cautery"}, {"points", {{1, 1}}}}}}};
  ASSERT_EQ(service_->handle_put_annotations("tissue", put.dump()).status, 200);
  const auto before = read_file_bytes(dir_ / "annotations/tissue.json");
  const Response r = service_->handle_put_annotations("tissue", put.dump());
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(json::parse(r.body)["error"], "version_conflict");
  EXPECT_EQ(read_file_bytes(dir_ / "annotations/tissue.json"), before);
  EXPECT_EQ(service_->get_annotations("tissue").version, 1);
}

TEST_F(ServiceTest, InvalidAnnotationsAreRejected) {
  const json bad_class = {{"expected_version", 0},
                          {"annotations", {{{"id", "x"}, {"class", "margin"}, {"points", {{1, 1}}}}}}};
  Response r = service_->handle_put_annotations("tissue", bad_class.dump());
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(json::parse(r.body)["error"], "validation_error");
  const json empty_line = {{"expected_version", 0},
                           {"annotations", {{{"id", "x"}, {"class", "cautery"}, {"points", json::array()}}}}};
  EXPECT_EQ(service_->handle_put_annotations("tissue", empty_line.dump()).status, 400);
  EXPECT_EQ(service_->handle_put_annotations("tissue", R"({"annotations":[]})").status, 400);
  EXPECT_EQ(service_->get_annotations("tissue").version, 0);
}

TEST_F(ServiceTest, RefineThenSavePersistsTheContourVerbatim) {
  const json body = {{"roi", roi_around(boundary_point(), 12)}};
  const auto contour = json::parse(service_->handle_refine("tissue", body.dump()).body)["contour"];
  ASSERT_FALSE(contour.empty());
  auto current = json::parse(service_->handle_get_annotations("tissue").body);
  json list = current["annotations"];
  list.push_back({{"id", "refined-1"}, {"class", "cautery"}, {"source", "refined"}, {"points", contour}});
  const json put = {{"expected_version", current["version"]}, {"annotations", list}};
  const Response r = service_->handle_put_annotations("tissue", put.dump());
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(json::parse(r.body)["version"], current["version"].get<int>() + 1);
  const auto after = json::parse(service_->handle_get_annotations("tissue").body);
  EXPECT_EQ(after["annotations"].size(), annotations_.annotations.size() + 1);
  EXPECT_EQ(after["annotations"].back()["points"], contour);
}

TEST_F(ServiceTest, ConcurrentWritersExactlyOneWins) {
  for (int round = 0; round < 5; ++round) {
    const std::int64_t v = service_->get_annotations("flat").version;
    std::atomic<int> ok{0}, conflict{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
      threads.emplace_back([&, t] {
        AnnotationSet s;
        s.annotations.push_back({"w" + std::to_string(t), AnnotationClass::kCautery, {{t, t}}, {}});
        try {
          service_->put_annotations("flat", s, v);
          ++ok;
        } catch (const Error& e) {
          if (e.code() == ErrorCode::kVersionConflict) ++conflict;
        }
      });
    }
    for (auto& th : threads) th.join();
    EXPECT_EQ(ok.load(), 1);
    EXPECT_EQ(conflict.load(), 3);
    EXPECT_EQ(service_->get_annotations("flat").version, v + 1);
  }
}

TEST_F(ServiceTest, PreviewComputedOnceUnderConcurrentFirstRequests) {
  const json body = {{"roi", roi_around(boundary_point(), 12)}};
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int t = 0; t < 6; ++t) {
    threads.emplace_back([&] {
      if (service_->handle_refine("tissue", body.dump()).status == 200) ++ok;
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(ok.load(), 6);
  EXPECT_EQ(service_->preview_computations(), 1);
  // Different parameters get their own preview.
  service_->handle_refine("tissue", json{{"roi", body["roi"]}, {"params", {{"close_radius", 2}}}}.dump());
  EXPECT_EQ(service_->preview_computations(), 2);
}

TEST_F(ServiceTest, OverlayNeedsDecisionsAndMatchingGeometry) {
  Response r = service_->handle_overlay("tissue");
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(json::parse(r.body)["error"], "no_inference_results");
  const DataLayout l(dir_.path());
  fs::create_directories(l.regions_dir());
  RegionDecision d;
  d.region = {0, 0};
  d.votes_cautery = d.participating = 3;
  d.decision = Decision::kCautery;
  write_file_atomic(l.regions("tissue"), decisions_to_json({d}));
  r = service_->handle_overlay("tissue");
  ASSERT_EQ(r.status, 200);
  const RasterImage img = decode_png(std::vector<std::uint8_t>(r.body.begin(), r.body.end()));
  EXPECT_EQ(img.width(), 256);
  d.region = {3, 3};
  write_file_atomic(l.regions("tissue"), decisions_to_json({d}));
  r = service_->handle_overlay("tissue");
  EXPECT_EQ(r.status, 500);
  EXPECT_EQ(json::parse(r.body)["error"], "geometry_mismatch");
}

TEST(Service, StatusMapping) {
  EXPECT_EQ(http_status(ErrorCode::kUnknownSlide), 404);
  EXPECT_EQ(http_status(ErrorCode::kBadWindow), 400);
  EXPECT_EQ(http_status(ErrorCode::kLevelForbiddenInReview), 403);
  EXPECT_EQ(http_status(ErrorCode::kVersionConflict), 409);
  EXPECT_EQ(http_status(ErrorCode::kNoEdgeFound), 422);
  EXPECT_EQ(http_status(ErrorCode::kEmptyRoi), 422);
  EXPECT_EQ(http_status(ErrorCode::kGeometryMismatch), 500);
}

TEST_F(ServiceTest, HttpRoundTrip) {
  HttpServer server(*service_);
  const int port = server.start("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  httplib::Client cli("127.0.0.1", port);
  auto res = cli.Get("/slides");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body).size(), 2u);

  res = cli.Get("/slides/tissue/view?x=0&y=0&w=32&h=32&level=16");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Type"), "image/png");
  res = cli.Get("/slides/tissue/view?x=0&y=0&w=32&h=32&level=4&review=1");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 403);
  res = cli.Get("/slides/ghost/annotations");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);

  res = cli.Post("/slides/flat/refine", R"({"roi":[[5,5],[50,5],[50,50],[5,50]]})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 422);
  EXPECT_EQ(json::parse(res->body)["error"], "no_edge_found");

  const json put = {{"expected_version", 0},
                    {"annotations", {{{"id", "h"}, {"class", "non_cautery"}, {"points", {{3, 4}}}}}}};
  res = cli.Put("/slides/flat/annotations", put.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  res = cli.Put("/slides/flat/annotations", put.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 409);
  res = cli.Get("/slides/flat/annotations");
  ASSERT_TRUE(res);
  EXPECT_EQ(json::parse(res->body)["version"], 1);
  res = cli.Get("/slides/flat/overlay");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  server.stop();
}

}  // namespace
}  // namespace vin
