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

#include "vin/classifier.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "vin/binary_io.h"
#include "vin/error.h"
#include "vin/rng.h"

namespace vin {

void Dataset::add(std::span<const double> features, int label, const std::string& group_id) {
  if (dim == 0 && y.empty()) dim = static_cast<int>(features.size());
  if (features.size() != static_cast<std::size_t>(dim)) {
    throw Error(ErrorCode::kDimensionMismatch, "sample width differs from dataset width");
  }
  x.insert(x.end(), features.begin(), features.end());
  y.push_back(label);
  group.push_back(group_id);
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double stable_ce(int y, double z) {
  if (!std::isfinite(z)) throw Error(ErrorCode::kNonFiniteInput, "logit is not finite");
  if (y != 0 && y != 1) throw Error(ErrorCode::kInvalidArgument, "label must be 0 or 1");
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

MlpModel init_model(int input_dim, int hidden_dim, std::uint64_t seed) {
  if (input_dim < 1 || hidden_dim < 1) {
    throw Error(ErrorCode::kInvalidArgument, "model widths must be positive");
  }
  MlpModel m;
  m.input_dim = input_dim;
  m.hidden_dim = hidden_dim;
  Rng rng(seed);
  const double a1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  m.w1.resize(static_cast<std::size_t>(hidden_dim) * input_dim);
  for (double& w : m.w1) w = static_cast<float>(rng.uniform(-a1, a1));
  m.b1.assign(static_cast<std::size_t>(hidden_dim), 0.0);
  m.w2.resize(static_cast<std::size_t>(hidden_dim));
  for (double& w : m.w2) w = static_cast<float>(rng.uniform(-a2, a2));
  m.b2 = 0.0;
  return m;
}

namespace {

void check_input(const MlpModel& model, std::size_t n) {
  if (n != static_cast<std::size_t>(model.input_dim)) {
    throw Error(ErrorCode::kDimensionMismatch,
                "model expects " + std::to_string(model.input_dim) + " features, got " +
                    std::to_string(n));
  }
}

// Hidden activations after ReLU (and dropout, when a mask is given).
void hidden_layer(const MlpModel& model, std::span<const double> x,
                  const std::vector<std::uint8_t>* mask, double dropout_p,
                  std::vector<double>& pre, std::vector<double>& h) {
  const auto H = static_cast<std::size_t>(model.hidden_dim);
  const auto D = static_cast<std::size_t>(model.input_dim);
  pre.resize(H);
  h.resize(H);
  const double scale = mask ? 1.0 / (1.0 - dropout_p) : 1.0;
  for (std::size_t j = 0; j < H; ++j) {
    double acc = model.b1[j];
    const double* w = model.w1.data() + j * D;
    for (std::size_t k = 0; k < D; ++k) acc += w[k] * x[k];
    pre[j] = acc;
    double a = acc > 0 ? acc : 0.0;
    if (mask) a = (*mask)[j] ? a * scale : 0.0;
    h[j] = a;
  }
}

MlpModel rounded(const MlpModel& m) {
  MlpModel r = m;
  auto round_all = [](std::vector<double>& v) {
    for (double& x : v) x = static_cast<float>(x);
  };
  round_all(r.w1);
  round_all(r.b1);
  round_all(r.w2);
  r.b2 = static_cast<float>(r.b2);
  return r;
}

}  // namespace

double forward(const MlpModel& model, std::span<const double> x,
               const std::vector<std::uint8_t>* dropout_mask, double dropout_p) {
  check_input(model, x.size());
  if (dropout_mask && dropout_mask->size() != static_cast<std::size_t>(model.hidden_dim)) {
    throw Error(ErrorCode::kDimensionMismatch, "dropout mask must have hidden_dim entries");
  }
  std::vector<double> pre, h;
  hidden_layer(model, x, dropout_mask, dropout_p, pre, h);
  double z = model.b2;
  for (std::size_t j = 0; j < h.size(); ++j) z += model.w2[j] * h[j];
  return z;
}

Gradients backward(const MlpModel& model, const Dataset& batch,
                   const std::vector<std::vector<std::uint8_t>>& masks, double dropout_p) {
  if (batch.size() == 0) throw Error(ErrorCode::kEmptyTrainingSet, "empty batch");
  check_input(model, static_cast<std::size_t>(batch.dim));
  if (!masks.empty() && masks.size() != batch.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one dropout mask per example required");
  }
  const auto H = static_cast<std::size_t>(model.hidden_dim);
  const auto D = static_cast<std::size_t>(model.input_dim);
  Gradients g;
  g.w1.assign(model.w1.size(), 0.0);
  g.b1.assign(H, 0.0);
  g.w2.assign(H, 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const double scale = 1.0 / (1.0 - dropout_p);
  std::vector<double> pre, h;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto x = batch.row(i);
    const std::vector<std::uint8_t>* mask = masks.empty() ? nullptr : &masks[i];
    if (mask && mask->size() != H) {
      throw Error(ErrorCode::kDimensionMismatch, "dropout mask must have hidden_dim entries");
    }
    hidden_layer(model, x, mask, dropout_p, pre, h);
    double z = model.b2;
    for (std::size_t j = 0; j < H; ++j) z += model.w2[j] * h[j];
    g.loss += stable_ce(batch.y[i], z) * inv_n;
    const double dz = (sigmoid(z) - batch.y[i]) * inv_n;
    g.b2 += dz;
    for (std::size_t j = 0; j < H; ++j) {
      g.w2[j] += dz * h[j];
      if (pre[j] <= 0) continue;
      double dpre = dz * model.w2[j];
      if (mask) dpre = (*mask)[j] ? dpre * scale : 0.0;
      if (dpre == 0.0) continue;
      g.b1[j] += dpre;
      double* gw = g.w1.data() + j * D;
      for (std::size_t k = 0; k < D; ++k) gw[k] += dpre * x[k];
    }
  }
  return g;
}

void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state,
                 const TrainConfig& config) {
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.t = 0;
  }
  ++state.t;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * grads[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_eps);
  }
}

void adam_step(MlpModel& model, AdamState& state, const Gradients& grads,
               const TrainConfig& config) {
  // Flat view in the order W1, b1, W2, b2.
  std::vector<double> params;
  params.reserve(model.parameter_count());
  params.insert(params.end(), model.w1.begin(), model.w1.end());
  params.insert(params.end(), model.b1.begin(), model.b1.end());
  params.insert(params.end(), model.w2.begin(), model.w2.end());
  params.push_back(model.b2);
  std::vector<double> flat;
  flat.reserve(params.size());
  flat.insert(flat.end(), grads.w1.begin(), grads.w1.end());
  flat.insert(flat.end(), grads.b1.begin(), grads.b1.end());
  flat.insert(flat.end(), grads.w2.begin(), grads.w2.end());
  flat.push_back(grads.b2);
  if (flat.size() != params.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "gradient shapes differ from the model");
  }
  adam_update(params, flat, state, config);
  auto it = params.begin();
  std::copy(it, it + static_cast<std::ptrdiff_t>(model.w1.size()), model.w1.begin());
  it += static_cast<std::ptrdiff_t>(model.w1.size());
  std::copy(it, it + static_cast<std::ptrdiff_t>(model.b1.size()), model.b1.begin());
  it += static_cast<std::ptrdiff_t>(model.b1.size());
  std::copy(it, it + static_cast<std::ptrdiff_t>(model.w2.size()), model.w2.begin());
  model.b2 = params.back();
}

Prediction predict(const MlpModel& model, std::span<const double> x) {
  const double z = forward(model, x);
  return {sigmoid(z), z >= 0.0 ? 1 : 0};
}

Prediction predict(const MlpModel& model, std::span<const float> x) {
  std::vector<double> xd(x.begin(), x.end());
  return predict(model, std::span<const double>(xd));
}

double accuracy_on(const MlpModel& model, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (predict(model, data.row(i)).label == data.y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainResult train(const Dataset& data, const TrainConfig& config) {
  if (data.size() == 0) throw Error(ErrorCode::kEmptyTrainingSet, "no training samples");
  if (config.max_epochs < 1) {
    throw Error(ErrorCode::kEmptyTrainingSet, "max_epochs must be at least 1");
  }
  if (config.batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  if (!(config.dropout_p >= 0.0 && config.dropout_p < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "dropout_p must lie in [0, 1)");
  }
  if (!(config.learning_rate >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "learning_rate must be non-negative");
  }
  if (!(config.val_fraction >= 0.0 && config.val_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "val_fraction must lie in [0, 1)");
  }
  std::set<int> labels;
  for (int y : data.y) {
    if (y != 0 && y != 1) {
      throw Error(ErrorCode::kInvalidArgument, "training labels must be 0 or 1");
    }
    labels.insert(y);
  }
  if (labels.size() < 2) throw Error(ErrorCode::kSingleClassData, "training data has one class");

  // Slide-grouped validation split.
  std::vector<std::string> groups(data.group.begin(), data.group.end());
  std::sort(groups.begin(), groups.end());
  groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
  Rng split_rng(derive_seed(config.seed, "train.split"));
  split_rng.shuffle(groups.begin(), groups.end());
  std::size_t n_val = 0;
  if (groups.size() >= 2 && config.val_fraction > 0) {
    n_val = static_cast<std::size_t>(
        std::llround(config.val_fraction * static_cast<double>(groups.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, groups.size() - 1);
  }
  const std::set<std::string> val_groups(groups.begin(), groups.begin() + static_cast<std::ptrdiff_t>(n_val));

  Dataset train_set, val_set;
  train_set.dim = val_set.dim = data.dim;
  for (std::size_t i = 0; i < data.size(); ++i) {
    (val_groups.count(data.group[i]) ? val_set : train_set).add(data.row(i), data.y[i], data.group[i]);
  }
  if (train_set.size() == 0) throw Error(ErrorCode::kEmptyTrainingSet, "training split is empty");
  // Without a held-out slide, selection falls back to training accuracy.
  const Dataset& selection_set = val_set.size() > 0 ? val_set : train_set;

  const int hidden = config.hidden_dim > 0 ? config.hidden_dim : data.dim;
  MlpModel model = init_model(data.dim, hidden, derive_seed(config.seed, "train.init"));
  AdamState adam;
  Rng order_rng(derive_seed(config.seed, "train.order"));
  Rng dropout_rng(derive_seed(config.seed, "train.dropout"));

  TrainResult result;
  result.report.validation_groups.assign(val_groups.begin(), val_groups.end());
  MlpModel best = rounded(model);
  double best_acc = -1.0;

  std::vector<std::size_t> order(train_set.size());
  const auto H = static_cast<std::size_t>(hidden);
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    order_rng.shuffle(order.begin(), order.end());
    double loss_sum = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      Dataset batch;
      batch.dim = data.dim;
      std::vector<std::vector<std::uint8_t>> masks;
      for (std::size_t k = begin; k < end; ++k) {
        batch.add(train_set.row(order[k]), train_set.y[order[k]], {});
        if (config.dropout_p > 0) {
          std::vector<std::uint8_t> mask(H);
          for (auto& keep : mask) keep = dropout_rng.bernoulli(config.dropout_p) ? 0 : 1;
          masks.push_back(std::move(mask));
        }
      }
      const Gradients g = backward(model, batch, masks, config.dropout_p);
      loss_sum += g.loss * static_cast<double>(end - begin);
      adam_step(model, adam, g, config);
    }
    result.report.train_loss.push_back(loss_sum / static_cast<double>(order.size()));
    const MlpModel snapshot = rounded(model);
    const double acc = accuracy_on(snapshot, selection_set);
    result.report.val_accuracy.push_back(acc);
    if (acc > best_acc) {
      best_acc = acc;
      best = snapshot;
      result.report.best_epoch = epoch;
    }
  }
  result.report.best_val_accuracy = best_acc;
  result.model = std::move(best);
  return result;
}

std::vector<std::uint8_t> encode_model(const MlpModel& model, const std::string& metadata_json) {
  if (model.input_dim < 1 || model.hidden_dim < 1 ||
      model.w1.size() != static_cast<std::size_t>(model.input_dim) * model.hidden_dim ||
      model.b1.size() != static_cast<std::size_t>(model.hidden_dim) ||
      model.w2.size() != static_cast<std::size_t>(model.hidden_dim)) {
    throw Error(ErrorCode::kDimensionMismatch, "model weights do not match its widths");
  }
  ByteWriter w;
  w.bytes("VINM");
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(model.input_dim));
  w.u32(static_cast<std::uint32_t>(model.hidden_dim));
  for (double v : model.w1) w.f32(static_cast<float>(v));
  for (double v : model.b1) w.f32(static_cast<float>(v));
  for (double v : model.w2) w.f32(static_cast<float>(v));
  w.f32(static_cast<float>(model.b2));
  w.u32(static_cast<std::uint32_t>(metadata_json.size()));
  w.bytes(metadata_json);
  return w.data();
}

Checkpoint decode_model(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (bytes.size() < 4 || r.bytes(4) != "VINM") {
    throw Error(ErrorCode::kBadMagic, "not a model checkpoint (magic mismatch)");
  }
  const std::uint32_t version = r.u32();
  if (version != kModelVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "checkpoint version " + std::to_string(version) + " is not supported");
  }
  Checkpoint ck;
  ck.model.input_dim = static_cast<int>(r.u32());
  ck.model.hidden_dim = static_cast<int>(r.u32());
  if (ck.model.input_dim < 1 || ck.model.hidden_dim < 1) {
    throw Error(ErrorCode::kDimensionMismatch, "checkpoint widths must be positive");
  }
  const std::uint64_t n_weights =
      static_cast<std::uint64_t>(ck.model.input_dim) * ck.model.hidden_dim +
      2ULL * ck.model.hidden_dim + 1;
  if (n_weights > r.remaining() / 4) throw Error(ErrorCode::kTruncatedFile, "checkpoint truncated");
  auto read_vec = [&](std::vector<double>& v, std::size_t n) {
    v.resize(n);
    for (double& x : v) x = r.f32();
  };
  read_vec(ck.model.w1, static_cast<std::size_t>(ck.model.input_dim) * ck.model.hidden_dim);
  read_vec(ck.model.b1, static_cast<std::size_t>(ck.model.hidden_dim));
  read_vec(ck.model.w2, static_cast<std::size_t>(ck.model.hidden_dim));
  ck.model.b2 = r.f32();
  ck.metadata_json = r.bytes(r.u32());
  if (r.remaining() != 0) throw Error(ErrorCode::kDecodeError, "trailing bytes in checkpoint");
  return ck;
}

void save_model(const MlpModel& model, const std::filesystem::path& path,
                const std::string& metadata_json) {
  write_file_atomic(path, encode_model(model, metadata_json));
}

Checkpoint load_model(const std::filesystem::path& path) {
  return decode_model(read_file_bytes(path));
}

}  // namespace vin
