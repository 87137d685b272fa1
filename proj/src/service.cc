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

#include "vin/service.h"

#include <algorithm>
#include <atomic>
#include <future>
#include <iostream>
#include <shared_mutex>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "vin/aggregate.h"
#include "vin/binary_io.h"

namespace vin {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kPreviewLevel = 16;
constexpr int kMaxWindowSide = 8192;

std::string read_text(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

Response png_response(const RasterImage& img) {
  const auto bytes = encode_png(img);
  return {200, "image/png", std::string(bytes.begin(), bytes.end())};
}

Response json_response(const json& doc, int status = 200) {
  return {status, "application/json", doc.dump()};
}

std::int64_t parse_int(const std::map<std::string, std::string>& q, const std::string& key,
                       std::optional<std::int64_t> fallback = std::nullopt) {
  const auto it = q.find(key);
  if (it == q.end()) {
    if (fallback) return *fallback;
    throw Error(ErrorCode::kBadWindow, "missing query parameter '" + key + "'");
  }
  std::size_t used = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(it->second, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != it->second.size()) {
    throw Error(ErrorCode::kBadWindow, "query parameter '" + key + "' is not an integer");
  }
  return v;
}

bool parse_flag(const std::map<std::string, std::string>& q, const std::string& key) {
  const auto it = q.find(key);
  return it != q.end() && (it->second == "1" || it->second == "true");
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownSlide:
    case ErrorCode::kNoInferenceResults:
    case ErrorCode::kFileNotFound:
      return 404;
    case ErrorCode::kBadWindow:
    case ErrorCode::kValidationError:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidSigma:
    case ErrorCode::kDecodeError:
      return 400;
    case ErrorCode::kLevelForbiddenInReview:
      return 403;
    case ErrorCode::kVersionConflict:
      return 409;
    case ErrorCode::kEmptyRoi:
    case ErrorCode::kNoEdgeFound:
    case ErrorCode::kDegenerate:
      return 422;
    case ErrorCode::kDataRootMissing:
      return 503;
    default:
      return 500;
  }
}

Response error_response(const Error& e) {
  return json_response({{"error", error_code_name(e.code())}, {"message", e.what()}},
                       http_status(e.code()));
}

struct AnnotateService::Session {
  SlideManifest manifest;
  fs::path png_path;

  std::once_flag slide_once;
  RasterImage slide;
  std::once_flag level4_once;
  RasterImage level4;
  std::once_flag level16_once;
  RasterImage level16;

  // Enhanced previews keyed by (sigma, close radius); the shared future
  // makes concurrent first requests wait on a single computation.
  std::mutex preview_mu;
  std::map<std::pair<double, int>, std::shared_future<EnhancedImage>> previews;

  std::shared_mutex annotations_mu;
  bool annotations_loaded = false;
  AnnotationSet annotations;

  const RasterImage& level(int l) {
    std::call_once(slide_once, [&] { slide = load_slide(png_path).second; });
    if (l == 1) return slide;
    if (l == 4) {
      std::call_once(level4_once, [&] { level4 = downsample_bilinear(slide, 4); });
      return level4;
    }
    std::call_once(level16_once, [&] { level16 = downsample_bilinear(slide, kPreviewLevel); });
    return level16;
  }
};

AnnotateService::AnnotateService(ServiceOptions options)
    : options_(std::move(options)), layout_(options_.data_root) {}

AnnotateService::~AnnotateService() = default;

int AnnotateService::preview_computations() const { return preview_computations_.load(); }

const EnhancedImage& AnnotateService::working_image(Session& s, const RefineParams& params) {
  std::shared_future<EnhancedImage> fut;
  {
    std::lock_guard lock(s.preview_mu);
    const auto key = std::make_pair(params.blur_sigma, params.close_radius);
    auto it = s.previews.find(key);
    if (it == s.previews.end()) {
      fut = std::async(std::launch::deferred, [this, &s, params] {
              ++preview_computations_;
              return prepare_preview(s.level(kPreviewLevel), params);
            }).share();
      s.previews.emplace(key, fut);
    } else {
      fut = it->second;
    }
  }
  // The map never erases, so the shared state outlives this reference.
  return fut.get();
}

std::vector<SlideManifest> AnnotateService::list_slides() const {
  if (!fs::is_directory(layout_.root())) {
    throw Error(ErrorCode::kDataRootMissing, "data root " + layout_.root().string() + " missing");
  }
  if (!fs::is_directory(layout_.slides_dir())) return {};
  return list_manifests(layout_);
}

AnnotateService::Session& AnnotateService::session(const std::string& slide_id) {
  std::lock_guard lock(sessions_mu_);
  const auto it = sessions_.find(slide_id);
  if (it != sessions_.end()) return *it->second;
  const bool plain = !slide_id.empty() &&
                     std::all_of(slide_id.begin(), slide_id.end(), [](char c) {
                       return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ||
                              c == '.';
                     }) &&
                     slide_id.find("..") == std::string::npos;
  if (!plain || !fs::exists(layout_.manifest(slide_id))) {
    throw Error(ErrorCode::kUnknownSlide, "unknown slide '" + slide_id + "'");
  }
  auto s = std::make_unique<Session>();
  s->manifest = read_manifest(layout_.manifest(slide_id));
  s->png_path = layout_.slide_png(slide_id);
  auto& ref = *s;
  sessions_.emplace(slide_id, std::move(s));
  return ref;
}

RasterImage AnnotateService::get_view(const std::string& slide_id, std::int64_t x, std::int64_t y,
                                      int w, int h, int level, bool review, bool enhanced) {
  Session& s = session(slide_id);
  if (level != 1 && level != 4 && level != kPreviewLevel) {
    throw Error(ErrorCode::kBadWindow, "level must be 1, 4 or 16");
  }
  if (review && level < kPreviewLevel) {
    throw Error(ErrorCode::kLevelForbiddenInReview, "review mode only serves level 16");
  }
  if (enhanced && level != kPreviewLevel) {
    throw Error(ErrorCode::kBadWindow, "the enhanced view exists at level 16 only");
  }
  if (w < 1 || h < 1 || w > kMaxWindowSide || h > kMaxWindowSide) {
    throw Error(ErrorCode::kBadWindow, "window sides must lie in [1, 8192]");
  }
  const std::int64_t fw = (s.manifest.width + level - 1) / level;
  const std::int64_t fh = (s.manifest.height + level - 1) / level;
  if (x >= fw || y >= fh || x + w <= 0 || y + h <= 0) {
    throw Error(ErrorCode::kBadWindow, "window does not intersect the slide");
  }
  if (!enhanced) return crop(s.level(level), {x, y}, w, h);

  const EnhancedImage& e = working_image(s, RefineParams{});
  RasterImage grey(e.width, e.height);
  for (int yy = 0; yy < e.height; ++yy) {
    for (int xx = 0; xx < e.width; ++xx) {
      const auto v = static_cast<std::uint8_t>(std::lround(std::clamp(e.at(xx, yy), 0.0, 1.0) * 255.0));
      grey.set(xx, yy, {v, v, v});
    }
  }
  return crop(grey, {x, y}, w, h);
}

std::vector<PixelPoint> AnnotateService::refine(const std::string& slide_id, const RoiPolygon& roi,
                                                const RefineParams& params) {
  Session& s = session(slide_id);
  if (params.downsample_factor != kPreviewLevel) {
    throw Error(ErrorCode::kInvalidArgument, "refinement runs on the level-16 preview");
  }
  if (!(params.blur_sigma > 0.0)) throw Error(ErrorCode::kInvalidSigma, "blur_sigma must be > 0");
  if (params.close_radius < 0 || params.close_radius > 32) {
    throw Error(ErrorCode::kInvalidArgument, "close_radius must lie in [0, 32]");
  }
  return refine_roi(working_image(s, params), roi, params);
}

AnnotationSet AnnotateService::get_annotations(const std::string& slide_id) {
  Session& s = session(slide_id);
  {
    std::shared_lock lock(s.annotations_mu);
    if (s.annotations_loaded) return s.annotations;
  }
  std::unique_lock lock(s.annotations_mu);
  if (!s.annotations_loaded) {
    const fs::path path = layout_.annotations(slide_id);
    if (fs::exists(path)) {
      s.annotations = read_annotations(path);
    } else {
      s.annotations = AnnotationSet{slide_id, 0, {}};
    }
    s.annotations_loaded = true;
  }
  return s.annotations;
}

std::int64_t AnnotateService::put_annotations(const std::string& slide_id, AnnotationSet set,
                                              std::int64_t expected_version) {
  Session& s = session(slide_id);
  get_annotations(slide_id);  // make sure the stored state is loaded
  std::unique_lock lock(s.annotations_mu);
  if (s.annotations.version != expected_version) {
    throw Error(ErrorCode::kVersionConflict,
                "expected version " + std::to_string(expected_version) + " but the store holds " +
                    std::to_string(s.annotations.version));
  }
  set.slide_id = slide_id;
  set.version = expected_version + 1;
  validate(set);
  fs::create_directories(layout_.annotations_dir());
  write_annotations(set, layout_.annotations(slide_id));
  s.annotations = std::move(set);
  return s.annotations.version;
}

RasterImage AnnotateService::get_overlay(const std::string& slide_id) {
  Session& s = session(slide_id);
  const fs::path regions = layout_.regions(slide_id);
  if (!fs::exists(regions)) {
    throw Error(ErrorCode::kNoInferenceResults, "no region decisions for '" + slide_id + "'");
  }
  const auto decisions = decisions_from_json(read_text(regions));
  std::vector<RegionId> eq;
  if (fs::exists(layout_.labels(slide_id))) {
    eq = equivocal_regions(slide_labels_from_json(read_text(layout_.labels(slide_id))));
  }
  const OverlayGeometry geom{s.manifest.width, s.manifest.height, options_.tiling.region_side,
                             options_.tiling.overlap, kPreviewLevel};
  return render_overlay(s.level(kPreviewLevel), geom, decisions, eq);
}

Response AnnotateService::handle_list() const {
  try {
    json out = json::array();
    for (const auto& m : list_slides()) {
      out.push_back({{"slide_id", m.slide_id},
                     {"width", m.width},
                     {"height", m.height},
                     {"block_id", m.block_id}});
    }
    return json_response(out);
  } catch (const Error& e) {
    return error_response(e);
  }
}

Response AnnotateService::handle_view(const std::string& slide_id,
                                      const std::map<std::string, std::string>& query) {
  try {
    const int level = static_cast<int>(parse_int(query, "level", kPreviewLevel));
    return png_response(get_view(slide_id, parse_int(query, "x"), parse_int(query, "y"),
                                 static_cast<int>(std::clamp<std::int64_t>(parse_int(query, "w"), -1, kMaxWindowSide + 1)),
                                 static_cast<int>(std::clamp<std::int64_t>(parse_int(query, "h"), -1, kMaxWindowSide + 1)),
                                 level, parse_flag(query, "review"), parse_flag(query, "enhanced")));
  } catch (const Error& e) {
    return error_response(e);
  }
}

Response AnnotateService::handle_refine(const std::string& slide_id, const std::string& body) {
  try {
    RoiPolygon roi;
    RefineParams params;
    try {
      const json doc = json::parse(body);
      for (const auto& p : doc.at("roi")) {
        if (!p.is_array() || p.size() != 2) {
          throw Error(ErrorCode::kValidationError, "roi points must be [x, y] pairs");
        }
        roi.points.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
      }
      if (doc.contains("params")) {
        const auto& j = doc["params"];
        params.blur_sigma = j.value("blur_sigma", params.blur_sigma);
        params.close_radius = j.value("close_radius", params.close_radius);
        params.downsample_factor = j.value("downsample_factor", params.downsample_factor);
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kValidationError, std::string("refine body: ") + e.what());
    }
    json contour = json::array();
    for (const auto& p : refine(slide_id, roi, params)) contour.push_back({p.x, p.y});
    return json_response({{"slide_id", slide_id}, {"contour", std::move(contour)}});
  } catch (const Error& e) {
    return error_response(e);
  }
}

Response AnnotateService::handle_get_annotations(const std::string& slide_id) {
  try {
    return {200, "application/json", annotations_to_json(get_annotations(slide_id))};
  } catch (const Error& e) {
    return error_response(e);
  }
}

Response AnnotateService::handle_put_annotations(const std::string& slide_id,
                                                 const std::string& body) {
  try {
    json doc;
    std::int64_t expected = 0;
    try {
      doc = json::parse(body);
      expected = doc.at("expected_version").get<std::int64_t>();
      doc = json{{"slide_id", slide_id}, {"version", expected}, {"annotations", doc.at("annotations")}};
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kValidationError, std::string("annotation body: ") + e.what());
    }
    const std::int64_t version =
        put_annotations(slide_id, annotations_from_json(doc.dump()), expected);
    return json_response({{"slide_id", slide_id}, {"version", version}});
  } catch (const Error& e) {
    return error_response(e);
  }
}

Response AnnotateService::handle_overlay(const std::string& slide_id) {
  try {
    return png_response(get_overlay(slide_id));
  } catch (const Error& e) {
    return error_response(e);
  }
}

struct HttpServer::Impl {
  AnnotateService& service;
  httplib::Server server;
  std::thread thread;

  explicit Impl(AnnotateService& s) : service(s) {
    const auto reply = [](httplib::Response& res, const Response& r) {
      res.status = r.status;
      res.set_content(r.body, r.content_type);
    };
    server.Get("/slides", [this, reply](const httplib::Request&, httplib::Response& res) {
      reply(res, service.handle_list());
    });
    server.Get(R"(/slides/([^/]+)/view)",
               [this, reply](const httplib::Request& req, httplib::Response& res) {
                 std::map<std::string, std::string> query;
                 for (const auto& [k, v] : req.params) query.emplace(k, v);
                 reply(res, service.handle_view(req.matches[1], query));
               });
    server.Post(R"(/slides/([^/]+)/refine)",
                [this, reply](const httplib::Request& req, httplib::Response& res) {
                  reply(res, service.handle_refine(req.matches[1], req.body));
                });
    server.Get(R"(/slides/([^/]+)/annotations)",
               [this, reply](const httplib::Request& req, httplib::Response& res) {
                 reply(res, service.handle_get_annotations(req.matches[1]));
               });
    server.Put(R"(/slides/([^/]+)/annotations)",
               [this, reply](const httplib::Request& req, httplib::Response& res) {
                 reply(res, service.handle_put_annotations(req.matches[1], req.body));
               });
    server.Get(R"(/slides/([^/]+)/overlay)",
               [this, reply](const httplib::Request& req, httplib::Response& res) {
                 reply(res, service.handle_overlay(req.matches[1]));
               });
    server.set_exception_handler(
        [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
          json body = {{"error", "internal"}, {"message", "unexpected failure"}};
          try {
            std::rethrow_exception(ep);
          } catch (const std::exception& e) {
            body["message"] = e.what();
          } catch (...) {
          }
          res.status = 500;
          res.set_content(body.dump(), "application/json");
        });
  }
};

HttpServer::HttpServer(AnnotateService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(ErrorCode::kIoError, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::run(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw Error(ErrorCode::kIoError, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void HttpServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace vin
