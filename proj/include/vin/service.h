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

/// @file service.h
/// @brief HTTP backend for the interactive annotation tool.
///
///   GET  /slides                                  manifest summaries
///   GET  /slides/{id}/view?x&y&w&h&level[&review][&enhanced]
///   POST /slides/{id}/refine                      {"roi": [[x, y], ...], "params": {...}}
///   GET  /slides/{id}/annotations                 stored set with its version
///   PUT  /slides/{id}/annotations                 {"expected_version": n, "annotations": [...]}
///   GET  /slides/{id}/overlay                     16x overlay PNG
///
/// Errors come back as {"error": code, "message": text}. Every handler is
/// also callable directly, which is how most tests drive the service.

#ifndef VIN_SERVICE_H_
#define VIN_SERVICE_H_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "vin/annotation.h"
#include "vin/edge_refine.h"
#include "vin/error.h"
#include "vin/pipeline.h"
#include "vin/slide_io.h"

namespace vin {

struct ServiceOptions {
  std::filesystem::path data_root;
  TileOptions tiling;
  int threads = 8;
};

/// Transport-neutral reply.
struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// HTTP status for a library error code.
int http_status(ErrorCode code);
Response error_response(const Error& e);

class AnnotateService {
 public:
  explicit AnnotateService(ServiceOptions options);
  ~AnnotateService();
  AnnotateService(const AnnotateService&) = delete;
  AnnotateService& operator=(const AnnotateService&) = delete;

  // Typed operations; failures throw vin::Error.
  std::vector<SlideManifest> list_slides() const;
  /// Window in the frame of `level` (1, 4 or 16), white-padded.
  RasterImage get_view(const std::string& slide_id, std::int64_t x, std::int64_t y, int w, int h,
                       int level, bool review, bool enhanced = false);
  std::vector<PixelPoint> refine(const std::string& slide_id, const RoiPolygon& roi,
                                 const RefineParams& params);
  AnnotationSet get_annotations(const std::string& slide_id);
  /// Returns the new version. Throws kVersionConflict when stale.
  std::int64_t put_annotations(const std::string& slide_id, AnnotationSet set,
                               std::int64_t expected_version);
  RasterImage get_overlay(const std::string& slide_id);

  /// Number of enhanced-preview computations so far (for the dedup test).
  int preview_computations() const;

  // JSON/PNG-level handlers mirroring the HTTP routes.
  Response handle_list() const;
  Response handle_view(const std::string& slide_id, const std::map<std::string, std::string>& query);
  Response handle_refine(const std::string& slide_id, const std::string& body);
  Response handle_get_annotations(const std::string& slide_id);
  Response handle_put_annotations(const std::string& slide_id, const std::string& body);
  Response handle_overlay(const std::string& slide_id);

 private:
  struct Session;
  Session& session(const std::string& slide_id);
  const EnhancedImage& working_image(Session& s, const RefineParams& params);

  ServiceOptions options_;
  DataLayout layout_;
  mutable std::mutex sessions_mu_;
  std::map<std::string, std::unique_ptr<Session>> sessions_;
  std::atomic<int> preview_computations_{0};
};

/// Binds the service to a socket on a background thread.
class HttpServer {
 public:
  explicit HttpServer(AnnotateService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Starts listening; port 0 picks a free port. Returns the bound port.
  int start(const std::string& host, int port);
  /// Blocks until stop() is called from another thread or a signal.
  void run(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vin

#endif  // VIN_SERVICE_H_
