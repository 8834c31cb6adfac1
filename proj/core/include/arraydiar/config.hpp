// core/include/arraydiar/config.hpp

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

#include <filesystem>
#include <string>

#include "arraydiar/audio.hpp"
#include "arraydiar/doa.hpp"
#include "arraydiar/features.hpp"
#include "arraydiar/model.hpp"

namespace arraydiar {

/// Toolkit-wide settings with their documented defaults. Loaded from a flat
/// key/value file; unknown keys and out-of-range values are rejected with
/// the offending key named.
struct PipelineConfig {
  StftConfig stft;                 // 400 / 160 / 512, hann
  double sound_speed = 343.0;
  int n_mics = 8;
  double array_radius = 0.0425;
  std::string geometry_file;       // empty -> circular array above

  int band_count = 16;
  double band_lo_hz = 125.0;
  double band_hi_hz = 7600.0;

  double alpha = 0.25;
  double beta = 0.25;
  double gamma_lo = 0.8;
  double gamma_hi = 1.0;
  double theta_n_max_deg = 45.0;
  int n_slots = 4;
  double chunk_seconds = 4.0;
  double learning_rate = 1e-4;
  int epochs = 40;
  int batch_size = 16;
  double val_fraction = 0.1;
  int hidden = 20;
  int slot_embed = 10;
  int context = 2;

  double threshold = 0.5;
  double min_on = 0.2;
  double max_gap = 0.3;
  double collar = 0.25;

  double doa_grid_step_deg = 1.0;
  double doa_band_lo_hz = 300.0;
  double doa_band_hi_hz = 3400.0;
  double doa_min_duration = 0.5;

  GeometrySpec geometry() const;
  FeatureExtractConfig feature_config() const;
  DoaSearchConfig doa_config() const;
  TrainConfig train_config() const;
};

/// Environment variable honored when no --config flag is given.
inline constexpr const char* kConfigEnvVar = "ARRAYDIAR_CONFIG";

PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& text,
                            const std::string& origin = "<string>");

/// Canonical echo of the effective settings, one 'key value' line each.
std::string dump_config(const PipelineConfig& config);

}  // namespace arraydiar
