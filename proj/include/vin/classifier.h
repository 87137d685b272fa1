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

/// @file classifier.h
/// @brief Two-layer perceptron head over cached patch features.
///
///   h = relu(W1 x + b1)          (H x D, H defaults to D)
///   h = h * mask / (1 - p)       (training only, inverted dropout)
///   z = W2 h + b2                (single logit)
///   P = sigmoid(z), label 1 iff P >= 0.5
///
/// Trained with Adam on the mean of the numerically stable binary
/// cross-entropy max(z, 0) - z y + log(1 + exp(-|z|)).
///
/// Checkpoint layout (little-endian):
///   "VINM" | u32 version=1 | u32 D | u32 H | W1 (H*D) | b1 (H) | W2 (H)
///   | b2 | u32 n | n bytes of UTF-8 JSON metadata, weights as f32.

#ifndef VIN_CLASSIFIER_H_
#define VIN_CLASSIFIER_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vin {

inline constexpr std::uint32_t kModelVersion = 1;

struct MlpModel {
  int input_dim = 0;
  int hidden_dim = 0;
  std::vector<double> w1;  // hidden_dim x input_dim, row-major
  std::vector<double> b1;  // hidden_dim
  std::vector<double> w2;  // hidden_dim
  double b2 = 0.0;

  std::size_t parameter_count() const { return w1.size() + b1.size() + w2.size() + 1; }
  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

struct TrainConfig {
  double learning_rate = 5e-4;
  int max_epochs = 1000;
  double dropout_p = 0.2;
  int batch_size = 256;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double val_fraction = 0.1;
  int hidden_dim = 0;  // 0 means "same as the input width"
};

struct TrainReport {
  std::vector<double> train_loss;
  std::vector<double> val_accuracy;
  int best_epoch = 0;  // 1-based
  double best_val_accuracy = 0.0;
  std::vector<std::string> validation_groups;
};

/// Samples with binary labels, grouped (by slide) for the validation split.
struct Dataset {
  int dim = 0;
  std::vector<double> x;  // n x dim
  std::vector<int> y;     // 0 or 1
  std::vector<std::string> group;

  std::size_t size() const { return y.size(); }
  std::span<const double> row(std::size_t i) const {
    return {x.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  void add(std::span<const double> features, int label, const std::string& group_id);
};

struct Prediction {
  double probability = 0.0;
  int label = 0;
};

double sigmoid(double z);

/// Throws kNonFiniteInput for non-finite z and kInvalidArgument for y
/// outside {0, 1}.
double stable_ce(int y, double z);

/// Uniform(+-1/sqrt(fan_in)) weights, zero biases, rounded to binary32.
MlpModel init_model(int input_dim, int hidden_dim, std::uint64_t seed);

/// Logit. `dropout_mask` (hidden_dim entries, 1 = keep) enables training
/// mode with inverted scaling by 1 / (1 - dropout_p).
double forward(const MlpModel& model, std::span<const double> x,
               const std::vector<std::uint8_t>* dropout_mask = nullptr, double dropout_p = 0.0);

struct Gradients {
  std::vector<double> w1;
  std::vector<double> b1;
  std::vector<double> w2;
  double b2 = 0.0;
  double loss = 0.0;  // mean CE over the batch
};

/// Gradients of the mean stable CE over the batch. `masks` is empty (no
/// dropout) or holds one hidden_dim mask per example.
Gradients backward(const MlpModel& model, const Dataset& batch,
                   const std::vector<std::vector<std::uint8_t>>& masks, double dropout_p);

struct AdamState {
  std::int64_t t = 0;
  std::vector<double> m;
  std::vector<double> v;
};

/// One bias-corrected Adam update; moments are lazily sized on first use.
void adam_step(MlpModel& model, AdamState& state, const Gradients& grads,
               const TrainConfig& config);

/// Elementwise Adam on a flat parameter vector.
void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state,
                 const TrainConfig& config);

struct TrainResult {
  MlpModel model;
  TrainReport report;
};

/// Mini-batch Adam with a slide-grouped validation split and best-epoch
/// checkpointing (ties keep the earliest epoch). Returned weights are
/// rounded to binary32, exactly what save_model persists.
/// Throws kEmptyTrainingSet, kSingleClassData or kInvalidArgument.
TrainResult train(const Dataset& data, const TrainConfig& config);

/// Throws kDimensionMismatch when |x| != input_dim.
Prediction predict(const MlpModel& model, std::span<const double> x);
Prediction predict(const MlpModel& model, std::span<const float> x);

double accuracy_on(const MlpModel& model, const Dataset& data);

struct Checkpoint {
  MlpModel model;
  std::string metadata_json = "{}";
};

std::vector<std::uint8_t> encode_model(const MlpModel& model, const std::string& metadata_json);
Checkpoint decode_model(std::span<const std::uint8_t> bytes);
void save_model(const MlpModel& model, const std::filesystem::path& path,
                const std::string& metadata_json = "{}");
/// Throws kBadMagic, kVersionMismatch or kTruncatedFile.
Checkpoint load_model(const std::filesystem::path& path);

}  // namespace vin

#endif  // VIN_CLASSIFIER_H_
