// core/include/arraydiar/model.hpp

// Copyright 2026  ArrayDiar Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "arraydiar/features.hpp"
#include "arraydiar/matrix.hpp"
#include "arraydiar/simulator.hpp"

namespace arraydiar {

struct ModelConfig {
  int input_dim = 49;   // 2*bands + 1 + embedding
  int hidden = 20;
  int slot_embed = 10;
  int n_slots = 4;
  int context = 2;  // combiner half-width in frames

  int context_width() const { return 2 * context + 1; }
  int concat_dim() const { return n_slots * slot_embed; }
};

enum class InitKind { kRandom, kSlotSymmetric };

/// Per-slot shared two-layer detector followed by a windowed linear combiner
/// over the concatenated slot embeddings.
struct ModelParams {
  ModelConfig cfg;
  Matrix w1;                      // hidden x input_dim
  std::vector<double> b1;         // hidden
  Matrix w2;                      // slot_embed x hidden
  std::vector<double> b2;         // slot_embed
  std::vector<Matrix> combiner;   // context_width() of n_slots x concat_dim
  std::vector<double> combiner_bias;  // n_slots

  static ModelParams init(const ModelConfig& cfg, std::uint64_t seed,
                          InitKind kind = InitKind::kRandom);

  std::size_t parameter_count() const;
  void flatten(std::vector<double>& out) const;
  void unflatten(std::span<const double> in);
  std::uint64_t checksum() const;
};

/// Gradient buffers with the same shapes as ModelParams.
struct ModelGradients {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;
  std::vector<Matrix> combiner;
  std::vector<double> combiner_bias;

  explicit ModelGradients(const ModelConfig& cfg);
  void zero();
  void flatten(std::vector<double>& out) const;
};

/// T x N frame activities, each strictly inside (0, 1).
Matrix forward(const ModelParams& params, const FusedFeatures& features);

/// Frame speech/overlap summary: the maximum and the second maximum of the
/// slot activities; a single slot defines the second maximum as 0.
struct VadOsd {
  double vad = 0.0;
  double osd = 0.0;
};
VadOsd vad_osd(std::span<const double> slot_probs);

/// Binary per-slot targets plus the derived any-speaker and overlap rows.
struct ActivityTargets {
  Matrix per_speaker;       // T x N in {0, 1}
  std::vector<double> vad;  // T
  std::vector<double> osd;  // T

  static ActivityTargets from_matrix(Matrix per_speaker);
};

inline constexpr double kBceClamp = 1e-7;

/// Multi-objective activity loss: mean per-slot BCE plus alpha * BCE on the
/// frame maximum vs any-speech and beta * BCE on the second maximum vs
/// overlap. Returns the gradient w.r.t. the activities; ties at the maxima
/// route the subgradient to the lowest slot index.
struct LossResult {
  double value = 0.0;
  Matrix grad;  // T x N
};
LossResult activity_loss(const Matrix& activities, const ActivityTargets& targets,
                         double alpha, double beta);

/// Forward plus full analytic backward; accumulates into grads and returns
/// the loss value.
double forward_backward(const ModelParams& params, const FusedFeatures& features,
                        const ActivityTargets& targets, double alpha, double beta,
                        ModelGradients& grads);

struct TrainConfig {
  double learning_rate = 1e-4;
  int max_epochs = 40;
  int batch_size = 16;
  double alpha = 0.25;
  double beta = 0.25;
  bool af_augment = true;
  double augment_probability = 0.5;
  double gamma_lo = 0.8;
  double gamma_hi = 1.0;
  double theta_n_max_deg = 45.0;
  double chunk_seconds = 4.0;
  double val_fraction = 0.1;
  int plateau_patience = 3;
  double plateau_factor = 0.5;
  double min_learning_rate = 1e-6;
  int early_stop_patience = 8;
  bool shuffle_slots = true;
  int hidden = 20;
  int slot_embed = 10;
  int context = 2;
  int n_slots = 4;
  std::uint64_t seed = 0;
};

struct TrainResult {
  ModelParams params;
  double initial_loss = 0.0;
  std::vector<double> train_loss;  // one mean loss per epoch
  std::vector<double> val_loss;
  int best_epoch = -1;
  double best_val_loss = 0.0;
};

/// Mini-batch Adam over fixed-length chunks cut from the scenes, with
/// on-the-fly close-speaker AF augmentation on half the chunks. Training is
/// single threaded and fully determined by cfg.seed. Returns the parameters
/// from the best validation epoch. Raises kNumericFailure on divergence.
TrainResult train(const std::vector<SceneTruth>& scenes, const TrainConfig& cfg,
                  const FeatureExtractConfig& feature_cfg,
                  const GeometrySpec& geometry);

/// Elementwise activities >= threshold.
Matrix infer(const ModelParams& params, const FusedFeatures& features,
             double threshold);

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace arraydiar
