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

/// @file pipeline.h
/// @brief Batch stages over a data root, one function per CLI subcommand.
///
/// Data root layout:
///
///   slides/<id>.png, slides/<id>.json   raster + manifest
///   annotations/<id>.json               expert polylines
///   plans/<id>.json                     region plan
///   labels/<id>.json                    kept regions + patch labels
///   features/<id>.vinf                  feature cache
///   model.vinm                          checkpoint
///   predictions/<id>.json               patch predictions
///   regions/<id>.json                   voted region decisions
///   margins/<id>.json                   stitched margin segments
///   overlays/<id>.png                   16x overlay

#ifndef VIN_PIPELINE_H_
#define VIN_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vin/aggregate.h"
#include "vin/annotation.h"
#include "vin/classifier.h"
#include "vin/features.h"
#include "vin/metrics.h"
#include "vin/slide_io.h"
#include "vin/synthetic.h"
#include "vin/tiler.h"

namespace vin {

class DataLayout {
 public:
  explicit DataLayout(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path slides_dir() const { return root_ / "slides"; }
  std::filesystem::path annotations_dir() const { return root_ / "annotations"; }
  std::filesystem::path plans_dir() const { return root_ / "plans"; }
  std::filesystem::path labels_dir() const { return root_ / "labels"; }
  std::filesystem::path features_dir() const { return root_ / "features"; }
  std::filesystem::path predictions_dir() const { return root_ / "predictions"; }
  std::filesystem::path regions_dir() const { return root_ / "regions"; }
  std::filesystem::path margins_dir() const { return root_ / "margins"; }
  std::filesystem::path overlays_dir() const { return root_ / "overlays"; }
  std::filesystem::path model_path() const { return root_ / "model.vinm"; }

  std::filesystem::path slide_png(const std::string& id) const { return slides_dir() / (id + ".png"); }
  std::filesystem::path manifest(const std::string& id) const { return slides_dir() / (id + ".json"); }
  std::filesystem::path annotations(const std::string& id) const {
    return annotations_dir() / (id + ".json");
  }
  std::filesystem::path plan(const std::string& id) const { return plans_dir() / (id + ".json"); }
  std::filesystem::path labels(const std::string& id) const { return labels_dir() / (id + ".json"); }
  std::filesystem::path cache(const std::string& id) const { return features_dir() / (id + ".vinf"); }
  std::filesystem::path predictions(const std::string& id) const {
    return predictions_dir() / (id + ".json");
  }
  std::filesystem::path regions(const std::string& id) const { return regions_dir() / (id + ".json"); }
  std::filesystem::path margins(const std::string& id) const { return margins_dir() / (id + ".json"); }
  std::filesystem::path overlay(const std::string& id) const { return overlays_dir() / (id + ".png"); }

 private:
  std::filesystem::path root_;
};

/// Manifests under slides/, sorted by slide id. Unreadable manifests are
/// skipped with a warning on stderr. Throws kDataRootMissing when slides/
/// does not exist.
std::vector<SlideManifest> list_manifests(const DataLayout& layout);

/// Restricts to manifests whose block_id is listed (empty = all).
std::vector<SlideManifest> select_blocks(const std::vector<SlideManifest>& all,
                                         const std::vector<std::string>& blocks);

struct SynthOptions {
  int slides = 10;
  std::uint64_t seed = 42;
  int blocks = 2;
  int width = 8192;
  int height = 8192;
  int blob_count = 0;  // 0: one or two blobs, drawn per slide
  int band_width = 96;
  std::optional<double> cautery_fraction;  // default: drawn from [0.3, 0.6]
  std::string id_prefix = "slide-";
};

/// Block names "A", "B", ... assigned in contiguous runs.
std::vector<SlideManifest> synth_dataset(const DataLayout& layout, const SynthOptions& options);

/// Writes one synthetic slide (PNG, manifest, annotations) into the layout.
SlideManifest write_synthetic_slide(const DataLayout& layout, const SyntheticSpec& spec,
                                    const std::string& block_id);

struct TileOptions {
  int region_side = kRegionSide;
  double overlap = kDefaultOverlap;
};

void tile_dataset(const DataLayout& layout, const TileOptions& options);
void rasterize_dataset(const DataLayout& layout);

struct ExtractOptions {
  std::string extractor = "toy-v1";
  int threads = 1;
  bool include_unlabeled = false;
};

/// Features for every labeled patch of the kept regions, records in region
/// then patch row-major order.
FeatureCache extract_slide(const RasterImage& slide, const SlideLabels& labels,
                           const FeatureExtractor& extractor, const ExtractOptions& options);
void extract_dataset(const DataLayout& layout, const ExtractOptions& options);

struct TrainOptions {
  TrainConfig config;
  std::vector<std::string> blocks;                // empty = every slide
  std::vector<std::filesystem::path> caches;      // empty = features/ of the layout
};

/// Builds a slide-grouped dataset from caches (labels 0/1 only), trains and
/// writes the checkpoint with metadata recording the training blocks.
TrainReport train_dataset(const DataLayout& layout, const TrainOptions& options,
                          const std::filesystem::path& model_out);

/// Patch predictions of one slide. Equivocal/unlabeled cache records keep
/// their label and carry no probability.
struct PatchPredictionRecord {
  RegionId region;
  GridPos grid;
  std::optional<double> probability;
  PatchLabel label = PatchLabel::kUnlabeled;
};

struct PatchPredictions {
  std::string slide_id;
  std::vector<PatchPredictionRecord> patches;
};

PatchPredictions infer_cache(const MlpModel& model, const FeatureCache& cache,
                             const std::string& slide_id, int threads = 1);
std::string predictions_to_json(const PatchPredictions& p);
PatchPredictions predictions_from_json(const std::string& text);

struct InferOptions {
  std::vector<std::string> blocks;
  bool allow_training_blocks = false;
  int threads = 1;
};

/// Throws kBlockLeakage for slides from blocks the model was trained on
/// unless allowed.
void infer_dataset(const DataLayout& layout, const std::filesystem::path& model_path,
                   const InferOptions& options);

/// One decision per kept region; patches without a prediction abstain.
std::vector<RegionDecision> vote_slide(const PatchPredictions& predictions,
                                       const SlideLabels& labels);
void vote_dataset(const DataLayout& layout);

void stitch_dataset(const DataLayout& layout, const TileOptions& options);

/// Region truths in `decisions` order; throws kMisalignedRegions when the
/// region sets differ.
ConfusionMatrix evaluate_regions(const std::vector<RegionDecision>& decisions,
                                 const SlideLabels& labels);
ConfusionMatrix evaluate_patches(const PatchPredictions& predictions, const SlideLabels& labels);

struct EvalOptions {
  std::string scope = "region";  // or "patch"
  std::vector<std::string> blocks;
  std::optional<std::filesystem::path> model;  // enables the block check
};

ConfusionMatrix eval_dataset(const DataLayout& layout, const EvalOptions& options);

/// Regions whose ground truth is dominated by equivocal patches.
std::vector<RegionId> equivocal_regions(const SlideLabels& labels);

void render_dataset(const DataLayout& layout, const TileOptions& options, int threads = 1);

/// Training blocks recorded in a checkpoint's metadata.
std::vector<std::string> training_blocks(const Checkpoint& checkpoint);

}  // namespace vin

#endif  // VIN_PIPELINE_H_
