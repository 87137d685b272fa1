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

#include "vin/pipeline.h"

#include <algorithm>
#include <iostream>
#include <map>
#include <set>

#include "json.hpp"
#include "vin/binary_io.h"
#include "vin/error.h"
#include "vin/parallel.h"
#include "vin/rng.h"
#include "vin/synthetic.h"

namespace vin {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_text(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string());
}

std::string block_name(int index) {
  std::string name;
  do {
    name.insert(name.begin(), static_cast<char>('A' + index % 26));
    index = index / 26 - 1;
  } while (index >= 0);
  return name;
}

SlideLabels read_labels(const DataLayout& layout, const std::string& id) {
  return slide_labels_from_json(read_text(layout.labels(id)));
}

}  // namespace

std::vector<SlideManifest> list_manifests(const DataLayout& layout) {
  const fs::path dir = layout.slides_dir();
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kDataRootMissing, "no slides directory under " + layout.root().string());
  }
  std::vector<SlideManifest> out;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      out.push_back(read_manifest(f));
    } catch (const Error& e) {
      std::cerr << "warning: skipping manifest " << f.string() << ": " << e.what() << "\n";
    }
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.slide_id < b.slide_id; });
  return out;
}

std::vector<SlideManifest> select_blocks(const std::vector<SlideManifest>& all,
                                         const std::vector<std::string>& blocks) {
  if (blocks.empty()) return all;
  std::vector<SlideManifest> out;
  for (const auto& m : all) {
    if (std::find(blocks.begin(), blocks.end(), m.block_id) != blocks.end()) out.push_back(m);
  }
  return out;
}

SlideManifest write_synthetic_slide(const DataLayout& layout, const SyntheticSpec& spec,
                                    const std::string& block_id) {
  ensure_dir(layout.slides_dir());
  ensure_dir(layout.annotations_dir());
  auto [img, annotations] = synthesize_slide(spec);
  SlideManifest m;
  m.slide_id = spec.slide_id;
  m.width = img.width();
  m.height = img.height();
  m.source_path = (fs::path("slides") / (spec.slide_id + ".png")).generic_string();
  m.block_id = block_id;
  save_png(img, layout.slide_png(spec.slide_id));
  write_manifest(m, layout.manifest(spec.slide_id));
  write_annotations(annotations, layout.annotations(spec.slide_id));
  return m;
}

std::vector<SlideManifest> synth_dataset(const DataLayout& layout, const SynthOptions& options) {
  if (options.slides < 1 || options.blocks < 1 || options.blocks > options.slides) {
    throw Error(ErrorCode::kInvalidArgument, "need 1 <= blocks <= slides");
  }
  std::vector<SlideManifest> out;
  for (int i = 0; i < options.slides; ++i) {
    Rng rng(derive_seed(options.seed, "synth.slide", static_cast<std::uint64_t>(i)));
    SyntheticSpec spec;
    spec.width = options.width;
    spec.height = options.height;
    spec.band_width = options.band_width;
    spec.tissue_blob_count =
        options.blob_count > 0 ? options.blob_count : 1 + static_cast<int>(rng.below(2));
    spec.cautery_arc_fraction =
        options.cautery_fraction ? *options.cautery_fraction : rng.uniform(0.3, 0.6);
    spec.seed = rng.next_u64();
    char id[32];
    std::snprintf(id, sizeof(id), "%03d", i);
    spec.slide_id = options.id_prefix + id;
    const int block = static_cast<int>(static_cast<std::int64_t>(i) * options.blocks / options.slides);
    out.push_back(write_synthetic_slide(layout, spec, block_name(block)));
  }
  return out;
}

void tile_dataset(const DataLayout& layout, const TileOptions& options) {
  ensure_dir(layout.plans_dir());
  for (const auto& m : list_manifests(layout)) {
    write_file_atomic(layout.plan(m.slide_id),
                      region_plan_to_json(plan_regions(m.width, m.height, options.region_side,
                                                       options.overlap)));
  }
}

void rasterize_dataset(const DataLayout& layout) {
  ensure_dir(layout.labels_dir());
  for (const auto& m : list_manifests(layout)) {
    const auto plan = region_plan_from_json(read_text(layout.plan(m.slide_id)));
    const AnnotationSet set = read_annotations(layout.annotations(m.slide_id));
    SlideLabels labels = label_slide(set, m.width, m.height, plan);
    labels.slide_id = m.slide_id;
    write_file_atomic(layout.labels(m.slide_id), slide_labels_to_json(labels));
  }
}

FeatureCache extract_slide(const RasterImage& slide, const SlideLabels& labels,
                           const FeatureExtractor& extractor, const ExtractOptions& options) {
  FeatureCache cache;
  cache.dimension = static_cast<std::uint32_t>(extractor.dimension());
  cache.extractor_id = extractor.id();
  for (const auto& region : labels.regions) {
    const auto patches = grid_patches(region.region);
    for (std::size_t p = 0; p < patches.size(); ++p) {
      const PatchLabel label = region.patches[p];
      if (label == PatchLabel::kUnlabeled && !options.include_unlabeled) continue;
      cache.records.push_back({region.region.id, patches[p].grid, patches[p].origin, label, {}});
    }
  }
  parallel_for(cache.records.size(), options.threads, [&](std::size_t i) {
    auto& rec = cache.records[i];
    rec.vector = extractor.extract(crop(slide, rec.origin, kPatchSide));
  });
  return cache;
}

void extract_dataset(const DataLayout& layout, const ExtractOptions& options) {
  ensure_dir(layout.features_dir());
  const auto extractor = make_extractor(options.extractor);
  for (const auto& m : list_manifests(layout)) {
    const SlideLabels labels = read_labels(layout, m.slide_id);
    const auto [manifest, slide] = load_slide(layout.slide_png(m.slide_id));
    if (manifest.width != m.width || manifest.height != m.height) {
      throw Error(ErrorCode::kGeometryMismatch, "slide " + m.slide_id + " differs from its manifest");
    }
    write_cache(extract_slide(slide, labels, *extractor, options), layout.cache(m.slide_id));
  }
}

TrainReport train_dataset(const DataLayout& layout, const TrainOptions& options,
                          const fs::path& model_out) {
  // (slide id, cache path) pairs.
  std::vector<std::pair<std::string, fs::path>> sources;
  std::set<std::string> blocks_used;
  if (options.caches.empty()) {
    for (const auto& m : select_blocks(list_manifests(layout), options.blocks)) {
      sources.emplace_back(m.slide_id, layout.cache(m.slide_id));
      blocks_used.insert(m.block_id);
    }
  } else {
    std::map<std::string, std::string> block_of;
    if (fs::is_directory(layout.slides_dir())) {
      for (const auto& m : list_manifests(layout)) block_of[m.slide_id] = m.block_id;
    }
    for (const auto& c : options.caches) {
      std::vector<fs::path> files;
      if (fs::is_directory(c)) {
        for (const auto& e : fs::directory_iterator(c)) {
          if (e.path().extension() == ".vinf") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
      } else {
        files.push_back(c);
      }
      for (const auto& f : files) {
        const std::string id = f.stem().string();
        const auto it = block_of.find(id);
        const std::string block = it == block_of.end() ? std::string() : it->second;
        if (!options.blocks.empty() &&
            std::find(options.blocks.begin(), options.blocks.end(), block) == options.blocks.end()) {
          continue;
        }
        if (!block.empty()) blocks_used.insert(block);
        sources.emplace_back(id, f);
      }
    }
  }

  Dataset data;
  std::string extractor_id;
  std::vector<double> row;
  for (const auto& [id, path] : sources) {
    const FeatureCache cache = read_cache(path);
    if (data.dim != 0 && static_cast<int>(cache.dimension) != data.dim) {
      throw Error(ErrorCode::kDimensionMismatch, "caches disagree on feature dimension");
    }
    data.dim = static_cast<int>(cache.dimension);
    extractor_id = cache.extractor_id;
    for (const auto& rec : cache.records) {
      if (rec.label != PatchLabel::kCautery && rec.label != PatchLabel::kNonCautery) continue;
      row.assign(rec.vector.begin(), rec.vector.end());
      data.add(row, rec.label == PatchLabel::kCautery ? 1 : 0, id);
    }
  }
  const TrainResult result = train(data, options.config);

  const auto& c = options.config;
  nlohmann::ordered_json meta;
  meta["seed"] = c.seed;
  meta["config"] = {{"learning_rate", c.learning_rate}, {"max_epochs", c.max_epochs},
                    {"dropout_p", c.dropout_p},         {"batch_size", c.batch_size},
                    {"adam_beta1", c.adam_beta1},       {"adam_beta2", c.adam_beta2},
                    {"adam_eps", c.adam_eps},           {"val_fraction", c.val_fraction}};
  meta["best_epoch"] = result.report.best_epoch;
  meta["best_val_accuracy"] = result.report.best_val_accuracy;
  meta["train_blocks"] = std::vector<std::string>(blocks_used.begin(), blocks_used.end());
  meta["validation_slides"] = result.report.validation_groups;
  meta["extractor_id"] = extractor_id;
  meta["samples"] = data.size();
  if (model_out.has_parent_path()) ensure_dir(model_out.parent_path());
  save_model(result.model, model_out, meta.dump());
  return result.report;
}

std::vector<std::string> training_blocks(const Checkpoint& checkpoint) {
  std::vector<std::string> out;
  try {
    const auto j = json::parse(checkpoint.metadata_json);
    if (j.contains("train_blocks")) out = j["train_blocks"].get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kDecodeError, std::string("checkpoint metadata: ") + e.what());
  }
  return out;
}

PatchPredictions infer_cache(const MlpModel& model, const FeatureCache& cache,
                             const std::string& slide_id, int threads) {
  if (static_cast<int>(cache.dimension) != model.input_dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "model expects D=" + std::to_string(model.input_dim) + ", cache has D=" +
                    std::to_string(cache.dimension));
  }
  PatchPredictions out{slide_id, std::vector<PatchPredictionRecord>(cache.records.size())};
  parallel_for(cache.records.size(), threads, [&](std::size_t i) {
    const auto& rec = cache.records[i];
    PatchPredictionRecord p{rec.region, rec.grid, std::nullopt, rec.label};
    if (rec.label == PatchLabel::kCautery || rec.label == PatchLabel::kNonCautery) {
      const Prediction pr = predict(model, std::span<const float>(rec.vector));
      p.probability = pr.probability;
      p.label = pr.label == 1 ? PatchLabel::kCautery : PatchLabel::kNonCautery;
    }
    out.patches[i] = p;
  });
  return out;
}

std::string predictions_to_json(const PatchPredictions& p) {
  json patches = json::array();
  for (const auto& r : p.patches) {
    patches.push_back({{"region_id", {r.region.row, r.region.col}},
                       {"grid_pos", {r.grid.r, r.grid.c}},
                       {"probability", r.probability ? json(*r.probability) : json(nullptr)},
                       {"label", patch_label_name(r.label)}});
  }
  return json{{"slide_id", p.slide_id}, {"patches", std::move(patches)}}.dump(1);
}

PatchPredictions predictions_from_json(const std::string& text) {
  PatchPredictions p;
  try {
    const auto doc = json::parse(text);
    p.slide_id = doc.at("slide_id").get<std::string>();
    for (const auto& j : doc.at("patches")) {
      PatchPredictionRecord r;
      r.region = {j.at("region_id").at(0).get<int>(), j.at("region_id").at(1).get<int>()};
      r.grid = {j.at("grid_pos").at(0).get<int>(), j.at("grid_pos").at(1).get<int>()};
      if (!j.at("probability").is_null()) r.probability = j["probability"].get<double>();
      const auto name = j.at("label").get<std::string>();
      bool ok = false;
      for (auto l : {PatchLabel::kNonCautery, PatchLabel::kCautery, PatchLabel::kEquivocal,
                     PatchLabel::kUnlabeled}) {
        if (name == patch_label_name(l)) {
          r.label = l;
          ok = true;
        }
      }
      if (!ok) throw Error(ErrorCode::kDecodeError, "unknown patch label '" + name + "'");
      p.patches.push_back(r);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kDecodeError, std::string("predictions json: ") + e.what());
  }
  return p;
}

void infer_dataset(const DataLayout& layout, const fs::path& model_path,
                   const InferOptions& options) {
  const Checkpoint ck = load_model(model_path);
  const auto trained = training_blocks(ck);
  ensure_dir(layout.predictions_dir());
  for (const auto& m : select_blocks(list_manifests(layout), options.blocks)) {
    if (!options.allow_training_blocks &&
        std::find(trained.begin(), trained.end(), m.block_id) != trained.end()) {
      throw Error(ErrorCode::kBlockLeakage, "slide " + m.slide_id + " belongs to training block " +
                                                m.block_id);
    }
    const FeatureCache cache = read_cache(layout.cache(m.slide_id));
    write_file_atomic(layout.predictions(m.slide_id),
                      predictions_to_json(infer_cache(ck.model, cache, m.slide_id, options.threads)));
  }
}

std::vector<RegionDecision> vote_slide(const PatchPredictions& predictions,
                                       const SlideLabels& labels) {
  std::map<std::pair<RegionId, GridPos>, PatchLabel> by_key;
  for (const auto& p : predictions.patches) by_key[{p.region, p.grid}] = p.label;
  std::vector<RegionDecision> out;
  for (const auto& region : labels.regions) {
    std::vector<PatchLabel> votes(kPatchesPerRegion, PatchLabel::kUnlabeled);
    for (int r = 0; r < kGridDim; ++r) {
      for (int c = 0; c < kGridDim; ++c) {
        const auto it = by_key.find({region.region.id, {r, c}});
        if (it != by_key.end()) votes[static_cast<std::size_t>(r * kGridDim + c)] = it->second;
      }
    }
    out.push_back(vote_region(votes, region.region.id));
  }
  return out;
}

void vote_dataset(const DataLayout& layout) {
  ensure_dir(layout.regions_dir());
  for (const auto& m : list_manifests(layout)) {
    if (!fs::exists(layout.predictions(m.slide_id))) continue;
    const auto preds = predictions_from_json(read_text(layout.predictions(m.slide_id)));
    write_file_atomic(layout.regions(m.slide_id),
                      decisions_to_json(vote_slide(preds, read_labels(layout, m.slide_id))));
  }
}

void stitch_dataset(const DataLayout& layout, const TileOptions& options) {
  ensure_dir(layout.margins_dir());
  const int stride = region_stride(options.region_side, options.overlap);
  for (const auto& m : list_manifests(layout)) {
    if (!fs::exists(layout.regions(m.slide_id))) continue;
    const auto decisions = decisions_from_json(read_text(layout.regions(m.slide_id)));
    write_file_atomic(layout.margins(m.slide_id),
                      segments_to_json(stitch_margins(decisions, stride)));
  }
}

ConfusionMatrix evaluate_regions(const std::vector<RegionDecision>& decisions,
                                 const SlideLabels& labels) {
  std::map<RegionId, Decision> truth_of;
  for (const auto& r : labels.regions) truth_of[r.region.id] = region_truth(r.patches);
  if (truth_of.size() != decisions.size()) {
    throw Error(ErrorCode::kMisalignedRegions, "prediction and truth cover different regions");
  }
  std::vector<std::pair<RegionId, Decision>> truths;
  for (const auto& d : decisions) {
    const auto it = truth_of.find(d.region);
    if (it == truth_of.end()) {
      throw Error(ErrorCode::kMisalignedRegions, "prediction for a region without ground truth");
    }
    truths.emplace_back(d.region, it->second);
  }
  return accumulate(decisions, truths);
}

ConfusionMatrix evaluate_patches(const PatchPredictions& predictions, const SlideLabels& labels) {
  std::map<std::pair<RegionId, GridPos>, PatchLabel> truth_of;
  for (const auto& r : labels.regions) {
    for (int i = 0; i < kPatchesPerRegion; ++i) {
      truth_of[{r.region.id, {i / kGridDim, i % kGridDim}}] = r.patches[static_cast<std::size_t>(i)];
    }
  }
  std::vector<PatchLabel> pred, truth;
  for (const auto& p : predictions.patches) {
    const auto it = truth_of.find({p.region, p.grid});
    if (it == truth_of.end()) {
      throw Error(ErrorCode::kMisalignedRegions, "patch prediction outside the labeled regions");
    }
    pred.push_back(p.label);
    truth.push_back(it->second);
  }
  return accumulate_patches(pred, truth);
}

ConfusionMatrix eval_dataset(const DataLayout& layout, const EvalOptions& options) {
  if (options.scope != "patch" && options.scope != "region") {
    throw Error(ErrorCode::kInvalidArgument, "scope must be 'region' or 'patch'");
  }
  std::vector<std::string> trained;
  if (options.model) trained = training_blocks(load_model(*options.model));
  ConfusionMatrix total;
  for (const auto& m : select_blocks(list_manifests(layout), options.blocks)) {
    const bool have = options.scope == "patch" ? fs::exists(layout.predictions(m.slide_id))
                                               : fs::exists(layout.regions(m.slide_id));
    if (!have) continue;
    if (std::find(trained.begin(), trained.end(), m.block_id) != trained.end()) {
      throw Error(ErrorCode::kBlockLeakage, "refusing to evaluate " + m.slide_id +
                                                " from training block " + m.block_id);
    }
    const SlideLabels labels = read_labels(layout, m.slide_id);
    if (options.scope == "patch") {
      total += evaluate_patches(predictions_from_json(read_text(layout.predictions(m.slide_id))), labels);
    } else {
      total += evaluate_regions(decisions_from_json(read_text(layout.regions(m.slide_id))), labels);
    }
  }
  return total;
}

std::vector<RegionId> equivocal_regions(const SlideLabels& labels) {
  std::vector<RegionId> out;
  for (const auto& r : labels.regions) {
    int eq = 0, c = 0, n = 0;
    for (auto l : r.patches) {
      eq += l == PatchLabel::kEquivocal;
      c += l == PatchLabel::kCautery;
      n += l == PatchLabel::kNonCautery;
    }
    if (eq > 0 && eq >= std::max(c, n)) out.push_back(r.region.id);
  }
  return out;
}

void render_dataset(const DataLayout& layout, const TileOptions& options, int /*threads*/) {
  ensure_dir(layout.overlays_dir());
  for (const auto& m : list_manifests(layout)) {
    if (!fs::exists(layout.regions(m.slide_id))) continue;
    const auto decisions = decisions_from_json(read_text(layout.regions(m.slide_id)));
    const auto [manifest, slide] = load_slide(layout.slide_png(m.slide_id));
    const RasterImage base = downsample_bilinear(slide, 16);
    std::vector<RegionId> eq;
    if (fs::exists(layout.labels(m.slide_id))) eq = equivocal_regions(read_labels(layout, m.slide_id));
    const OverlayGeometry geom{manifest.width, manifest.height, options.region_side,
                               options.overlap, 16};
    save_png(render_overlay(base, geom, decisions, eq), layout.overlay(m.slide_id));
  }
}

}  // namespace vin
