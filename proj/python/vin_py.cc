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

// Python bindings: the pipeline stages over a data root plus a few pure
// helpers. Feature caches and checkpoints come back as numpy arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "vin/aggregate.h"
#include "vin/classifier.h"
#include "vin/error.h"
#include "vin/features.h"
#include "vin/metrics.h"
#include "vin/pipeline.h"
#include "vin/rng.h"
#include "vin/tiler.h"

namespace py = pybind11;
namespace fs = std::filesystem;

namespace {

py::dict matrix_dict(const vin::ConfusionMatrix& m) {
  py::dict d;
  d["tp"] = m.tp;
  d["fp"] = m.fp;
  d["tn"] = m.tn;
  d["fn"] = m.fn;
  d["accuracy"] = m.total() ? py::cast(vin::accuracy(m)) : py::none();
  d["fnr"] = (m.tp + m.fn) ? py::cast(vin::fnr(m)) : py::none();
  return d;
}

py::array_t<double> as_array(const std::vector<double>& v, std::vector<py::ssize_t> shape) {
  py::array_t<double> a(shape);
  std::memcpy(a.mutable_data(), v.data(), v.size() * sizeof(double));
  return a;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Region-level cautery margin labeling for whole-slide images.";

  static py::exception<vin::Error> vin_error(m, "VinError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const vin::Error& e) {
      // Message prefixed by the stable code so callers can match on it.
      py::set_error(vin_error, (std::string(vin::error_code_name(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.def("derive_seed", &vin::derive_seed, py::arg("root"), py::arg("stage"), py::arg("index") = 0);
  m.def("axis_origins", &vin::axis_origins, py::arg("extent"), py::arg("side") = vin::kRegionSide,
        py::arg("overlap") = vin::kDefaultOverlap);
  m.def(
      "plan_regions",
      [](std::int64_t w, std::int64_t h, int side, double overlap) {
        py::list out;
        for (const auto& r : vin::plan_regions(w, h, side, overlap)) {
          out.append(py::make_tuple(r.id.row, r.id.col, r.origin.x, r.origin.y));
        }
        return out;
      },
      py::arg("width"), py::arg("height"), py::arg("side") = vin::kRegionSide,
      py::arg("overlap") = vin::kDefaultOverlap,
      "List of (row, col, origin_x, origin_y) in row-major order.");
  m.def("stable_ce", &vin::stable_ce, py::arg("y"), py::arg("z"));
  m.def("sigmoid", &vin::sigmoid, py::arg("z"));
  m.def(
      "vote_region",
      [](const std::vector<int>& labels) {
        std::vector<vin::PatchLabel> v;
        for (int l : labels) v.push_back(static_cast<vin::PatchLabel>(l));
        const auto d = vin::vote_region(v);
        return py::make_tuple(std::string(vin::decision_name(d.decision)), d.votes_cautery, d.votes_non);
      },
      py::arg("labels"),
      "Labels are 0 non-cautery, 1 cautery, 2 equivocal, 3 unlabeled. Returns (decision, cautery, non).");

  m.def(
      "read_cache",
      [](const fs::path& path) {
        const vin::FeatureCache c = vin::read_cache(path);
        const auto n = static_cast<py::ssize_t>(c.records.size());
        const auto d = static_cast<py::ssize_t>(c.dimension);
        py::array_t<float> x({n, d});
        py::array_t<std::uint8_t> labels(n);
        py::array_t<std::int64_t> keys({n, py::ssize_t{4}});
        auto xv = x.mutable_unchecked<2>();
        auto lv = labels.mutable_unchecked<1>();
        auto kv = keys.mutable_unchecked<2>();
        for (py::ssize_t i = 0; i < n; ++i) {
          const auto& r = c.records[static_cast<std::size_t>(i)];
          for (py::ssize_t k = 0; k < d; ++k) xv(i, k) = r.vector[static_cast<std::size_t>(k)];
          lv(i) = static_cast<std::uint8_t>(r.label);
          kv(i, 0) = r.region.row;
          kv(i, 1) = r.region.col;
          kv(i, 2) = r.grid.r;
          kv(i, 3) = r.grid.c;
        }
        py::dict out;
        out["extractor_id"] = c.extractor_id;
        out["features"] = x;
        out["labels"] = labels;
        out["keys"] = keys;
        return out;
      },
      py::arg("path"), "Feature cache as numpy arrays; keys are (region_row, region_col, grid_r, grid_c).");

  m.def(
      "load_model",
      [](const fs::path& path) {
        const vin::Checkpoint ck = vin::load_model(path);
        const auto& mm = ck.model;
        py::dict out;
        out["w1"] = as_array(mm.w1, {mm.hidden_dim, mm.input_dim});
        out["b1"] = as_array(mm.b1, {mm.hidden_dim});
        out["w2"] = as_array(mm.w2, {mm.hidden_dim});
        out["b2"] = mm.b2;
        out["metadata"] = ck.metadata_json;
        return out;
      },
      py::arg("path"));
  m.def(
      "predict_proba",
      [](const fs::path& model_path, py::array_t<double, py::array::c_style | py::array::forcecast> x) {
        if (x.ndim() != 2) throw vin::Error(vin::ErrorCode::kDimensionMismatch, "expected an (n, D) array");
        const vin::MlpModel model = vin::load_model(model_path).model;
        py::array_t<double> out(x.shape(0));
        auto ov = out.mutable_unchecked<1>();
        const auto d = static_cast<std::size_t>(x.shape(1));
        for (py::ssize_t i = 0; i < x.shape(0); ++i) {
          ov(i) = vin::predict(model, std::span<const double>(x.data(i, 0), d)).probability;
        }
        return out;
      },
      py::arg("model"), py::arg("x"));

  // Pipeline stages, mirroring the command-line tool.
  m.def(
      "synth",
      [](const fs::path& root, int slides, std::uint64_t seed, int blocks, int width, int height) {
        vin::SynthOptions o;
        o.slides = slides;
        o.seed = seed;
        o.blocks = blocks;
        o.width = width;
        o.height = height;
        std::vector<std::string> ids;
        for (const auto& s : vin::synth_dataset(vin::DataLayout(root), o)) ids.push_back(s.slide_id);
        return ids;
      },
      py::arg("root"), py::arg("slides") = 10, py::arg("seed") = 42, py::arg("blocks") = 2,
      py::arg("width") = 8192, py::arg("height") = 8192);
  m.def("tile", [](const fs::path& root) { vin::tile_dataset(vin::DataLayout(root), {}); }, py::arg("root"));
  m.def("rasterize", [](const fs::path& root) { vin::rasterize_dataset(vin::DataLayout(root)); },
        py::arg("root"));
  m.def(
      "extract",
      [](const fs::path& root, int threads) {
        vin::ExtractOptions o;
        o.threads = threads;
        py::gil_scoped_release release;
        vin::extract_dataset(vin::DataLayout(root), o);
      },
      py::arg("root"), py::arg("threads") = 1);
  m.def(
      "train",
      [](const fs::path& root, const std::vector<std::string>& blocks, int epochs, std::uint64_t seed) {
        const vin::DataLayout layout(root);
        vin::TrainOptions o;
        o.blocks = blocks;
        o.config.max_epochs = epochs;
        o.config.seed = vin::derive_seed(seed, "train", 0);
        vin::TrainReport r;
        {
          py::gil_scoped_release release;
          r = vin::train_dataset(layout, o, layout.model_path());
        }
        py::dict out;
        out["best_epoch"] = r.best_epoch;
        out["best_val_accuracy"] = r.best_val_accuracy;
        out["train_loss"] = r.train_loss;
        out["validation_groups"] = r.validation_groups;
        return out;
      },
      py::arg("root"), py::arg("blocks") = std::vector<std::string>{}, py::arg("epochs") = 1000,
      py::arg("seed") = 42);
  m.def(
      "infer",
      [](const fs::path& root, const std::vector<std::string>& blocks, bool allow_training_blocks, int threads) {
        const vin::DataLayout layout(root);
        vin::InferOptions o;
        o.blocks = blocks;
        o.allow_training_blocks = allow_training_blocks;
        o.threads = threads;
        vin::infer_dataset(layout, layout.model_path(), o);
      },
      py::arg("root"), py::arg("blocks") = std::vector<std::string>{},
      py::arg("allow_training_blocks") = false, py::arg("threads") = 1);
  m.def("vote", [](const fs::path& root) { vin::vote_dataset(vin::DataLayout(root)); }, py::arg("root"));
  m.def("stitch", [](const fs::path& root) { vin::stitch_dataset(vin::DataLayout(root), {}); }, py::arg("root"));
  m.def("render", [](const fs::path& root) { vin::render_dataset(vin::DataLayout(root), {}); }, py::arg("root"));
  m.def(
      "evaluate",
      [](const fs::path& root, const std::vector<std::string>& blocks, const std::string& scope) {
        const vin::DataLayout layout(root);
        vin::EvalOptions o;
        o.blocks = blocks;
        o.scope = scope;
        if (fs::exists(layout.model_path())) o.model = layout.model_path();
        py::dict out = matrix_dict(vin::eval_dataset(layout, o));
        out["scope"] = scope;
        return out;
      },
      py::arg("root"), py::arg("blocks") = std::vector<std::string>{}, py::arg("scope") = "region");
}
