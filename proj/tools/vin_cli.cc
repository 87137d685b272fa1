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

// vin: command-line driver for the margin-labeling pipeline.
//
//   vin synth --slides 10 --seed 42 --out data/
//   vin --data data/ tile
//   vin --data data/ rasterize
//   vin --data data/ extract --threads 8
//   vin --data data/ train --blocks A
//   vin --data data/ infer --blocks B
//   vin --data data/ vote
//   vin --data data/ stitch
//   vin --data data/ eval --blocks B
//   vin --data data/ render
//   vin --data data/ serve --port 8080
//
// Exit status: 0 on success, 1 on an operational error, 2 on a usage error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vin/binary_io.h"
#include "vin/error.h"
#include "vin/pipeline.h"
#include "vin/rng.h"
#include "vin/service.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string read_text(const fs::path& path) {
  const auto bytes = vin::read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

struct Globals {
  std::string data;
  std::uint64_t seed = 42;
  int threads = 1;
  int region_side = vin::kRegionSide;
  double overlap = vin::kDefaultOverlap;

  vin::TileOptions tiling() const { return {region_side, overlap}; }
};

void print_report(const vin::ConfusionMatrix& m, const std::string& scope,
                  const std::string& out_path) {
  const std::string report = vin::metrics_report_json(m, scope);
  std::cout << report << "\n";
  if (!out_path.empty()) vin::write_file_atomic(out_path, report + "\n");
}

int run(int argc, char** argv) {
  CLI::App app{"Whole-slide margin labeling: tiling, features, patch classifier, region votes"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  if (const char* env = std::getenv("VIN_DATA_DIR")) g.data = env;
  app.add_option("--data", g.data, "Data root (default: $VIN_DATA_DIR or .)");
  app.add_option("--seed", g.seed, "Root seed shared by every stochastic stage");
  app.add_option("--threads", g.threads, "Worker threads for patch-parallel stages")
      ->check(CLI::PositiveNumber);
  app.add_option("--region-side", g.region_side, "Region side in level-0 pixels")
      ->check(CLI::PositiveNumber);
  app.add_option("--overlap", g.overlap, "Fractional overlap between neighbouring regions");

  // synth
  vin::SynthOptions synth;
  std::string synth_out;
  double cautery_fraction = -1.0;
  auto* c_synth = app.add_subcommand("synth", "Generate synthetic slides with annotations");
  c_synth->add_option("--slides", synth.slides, "Number of slides");
  c_synth->add_option("--blocks", synth.blocks, "Number of tissue blocks (A, B, ...)");
  c_synth->add_option("--width", synth.width, "Slide width");
  c_synth->add_option("--height", synth.height, "Slide height");
  c_synth->add_option("--blob-count", synth.blob_count, "Tissue blobs per slide (0: random 1-2)");
  c_synth->add_option("--band-width", synth.band_width, "Cautery band width in pixels");
  c_synth->add_option("--cautery-fraction", cautery_fraction,
                      "Fixed cautery arc fraction (default: drawn per slide)");
  c_synth->add_option("--out", synth_out, "Output data root (default: --data)");

  auto* c_tile = app.add_subcommand("tile", "Write region plans for every slide");
  auto* c_raster = app.add_subcommand("rasterize", "Rasterize annotations into patch labels");

  // extract
  vin::ExtractOptions extract;
  std::string import_path, import_slide, import_id = "external";
  auto* c_extract = app.add_subcommand("extract", "Compute or import patch feature caches");
  c_extract->add_option("--extractor", extract.extractor, "Built-in extractor id");
  c_extract->add_flag("--include-unlabeled", extract.include_unlabeled,
                      "Also cache patches without a label");
  auto* o_import = c_extract->add_option("--import", import_path,
                                         "Import an externally computed cache file");
  c_extract->add_option("--slide", import_slide, "Slide id the imported cache belongs to")
      ->needs(o_import);
  c_extract->add_option("--extractor-id", import_id, "Extractor id stamped on imported caches")
      ->needs(o_import);

  // train
  vin::TrainOptions train;
  std::vector<std::string> cache_paths;
  std::string model_out;
  auto* c_train = app.add_subcommand("train", "Train the patch classifier");
  c_train->add_option("--cache", cache_paths, "Feature cache files or directories");
  c_train->add_option("--blocks", train.blocks, "Training blocks (default: all)")->delimiter(',');
  c_train->add_option("--epochs", train.config.max_epochs, "Maximum epochs");
  c_train->add_option("--lr", train.config.learning_rate, "Adam learning rate");
  c_train->add_option("--dropout", train.config.dropout_p, "Dropout probability");
  c_train->add_option("--batch", train.config.batch_size, "Mini-batch size");
  c_train->add_option("--val-fraction", train.config.val_fraction,
                      "Fraction of training slides held out for validation");
  c_train->add_option("--hidden", train.config.hidden_dim, "Hidden width (0: input width)");
  c_train->add_option("--out", model_out, "Checkpoint path (default: <data>/model.vinm)");

  // infer
  vin::InferOptions infer;
  std::string model_in;
  auto* c_infer = app.add_subcommand("infer", "Predict every cached patch");
  c_infer->add_option("--model", model_in, "Checkpoint (default: <data>/model.vinm)");
  c_infer->add_option("--blocks", infer.blocks, "Blocks to predict (default: all)")->delimiter(',');
  c_infer->add_flag("--allow-training-blocks", infer.allow_training_blocks,
                    "Permit predicting slides from training blocks");

  auto* c_vote = app.add_subcommand("vote", "Vote region decisions from patch predictions");
  auto* c_stitch = app.add_subcommand("stitch", "Stitch cautery regions into margin segments");

  // eval
  vin::EvalOptions eval;
  std::string pred_path, truth_path, eval_model, report_out;
  auto* c_eval = app.add_subcommand("eval", "Score predictions against ground truth");
  c_eval->add_option("--scope", eval.scope, "region or patch")
      ->check(CLI::IsMember({"region", "patch"}));
  c_eval->add_option("--blocks", eval.blocks, "Blocks to score (default: all)")->delimiter(',');
  bool eval_allow = false;
  c_eval->add_option("--model", eval_model,
                     "Checkpoint whose training blocks are refused (default: <data>/model.vinm if present)");
  c_eval->add_flag("--allow-training-blocks", eval_allow, "Skip the training-block check");
  auto* o_pred = c_eval->add_option("--pred", pred_path, "Single prediction file");
  auto* o_truth = c_eval->add_option("--truth", truth_path, "Single label file");
  o_pred->needs(o_truth);
  o_truth->needs(o_pred);
  c_eval->add_option("--out", report_out, "Also write the report here");

  auto* c_render = app.add_subcommand("render", "Paint 16x overlays of the region decisions");

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* c_serve = app.add_subcommand("serve", "Run the annotation HTTP service");
  c_serve->add_option("--host", host, "Bind address");
  c_serve->add_option("--port", port, "Port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    std::cerr << app.help();
    return 2;
  }

  if (g.data.empty()) g.data = ".";
  const vin::DataLayout layout(g.data);

  if (*c_synth) {
    const vin::DataLayout out(synth_out.empty() ? g.data : synth_out);
    synth.seed = g.seed;
    if (cautery_fraction >= 0.0) synth.cautery_fraction = cautery_fraction;
    const auto manifests = vin::synth_dataset(out, synth);
    std::cout << "wrote " << manifests.size() << " slides to " << out.root().string() << "\n";
  } else if (*c_tile) {
    vin::tile_dataset(layout, g.tiling());
  } else if (*c_raster) {
    vin::rasterize_dataset(layout);
  } else if (*c_extract) {
    extract.threads = g.threads;
    if (!import_path.empty()) {
      if (import_slide.empty()) {
        std::cerr << "--import needs --slide\n";
        return 2;
      }
      fs::create_directories(layout.features_dir());
      vin::write_cache(vin::import_external(import_path, import_id), layout.cache(import_slide));
    } else {
      vin::extract_dataset(layout, extract);
    }
  } else if (*c_train) {
    for (const auto& p : cache_paths) train.caches.emplace_back(p);
    train.config.seed = vin::derive_seed(g.seed, "train", 0);
    const fs::path out = model_out.empty() ? layout.model_path() : fs::path(model_out);
    const auto report = vin::train_dataset(layout, train, out);
    ordered_json j;
    j["best_epoch"] = report.best_epoch;
    j["best_val_accuracy"] = report.best_val_accuracy;
    j["final_train_loss"] = report.train_loss.empty() ? 0.0 : report.train_loss.back();
    j["validation_slides"] = report.validation_groups;
    j["model"] = out.string();
    std::cout << j.dump(2) << "\n";
  } else if (*c_infer) {
    infer.threads = g.threads;
    vin::infer_dataset(layout, model_in.empty() ? layout.model_path() : fs::path(model_in), infer);
  } else if (*c_vote) {
    vin::vote_dataset(layout);
  } else if (*c_stitch) {
    vin::stitch_dataset(layout, g.tiling());
  } else if (*c_eval) {
    if (!pred_path.empty()) {
      const auto truth = vin::slide_labels_from_json(read_text(truth_path));
      vin::ConfusionMatrix m;
      if (eval.scope == "patch") {
        m = vin::evaluate_patches(vin::predictions_from_json(read_text(pred_path)), truth);
      } else {
        m = vin::evaluate_regions(vin::decisions_from_json(read_text(pred_path)), truth);
      }
      print_report(m, eval.scope, report_out);
    } else {
      if (!eval_model.empty()) {
        eval.model = eval_model;
      } else if (fs::exists(layout.model_path())) {
        eval.model = layout.model_path();
      }
      if (eval_allow) eval.model.reset();
      print_report(vin::eval_dataset(layout, eval), eval.scope, report_out);
    }
  } else if (*c_render) {
    vin::render_dataset(layout, g.tiling(), g.threads);
  } else if (*c_serve) {
    vin::AnnotateService service({layout.root(), g.tiling(), g.threads});
    vin::HttpServer server(service);
    std::cerr << "serving " << layout.root().string() << " on http://" << host << ":" << port << "\n";
    server.run(host, port);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const vin::Error& e) {
    std::cerr << "error [" << vin::error_code_name(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
