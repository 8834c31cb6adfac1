// core/src/config.cpp

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

#include "arraydiar/config.hpp"

#include <cstdio>
#include <sstream>

#include "arraydiar/error.hpp"
#include "arraydiar/io.hpp"

namespace arraydiar {

namespace {

const std::vector<std::string> kKnownKeys = {
    "stft_window_len", "stft_hop",        "stft_fft_size",   "stft_window",
    "sound_speed",     "n_mics",          "array_radius",    "geometry_file",
    "band_count",      "band_lo_hz",      "band_hi_hz",      "alpha",
    "beta",            "gamma_lo",        "gamma_hi",        "theta_n_max_deg",
    "n_slots",         "chunk_seconds",   "learning_rate",   "epochs",
    "batch_size",      "val_fraction",    "hidden",          "slot_embed",
    "context",         "threshold",       "min_on",          "max_gap",
    "collar",          "doa_grid_step_deg", "doa_band_lo_hz", "doa_band_hi_hz",
    "doa_min_duration"};

void check_range(bool ok, const std::string& key, const std::string& what) {
  if (!ok) {
    raise(ErrorCode::kInvalidArgument,
          "config: '" + key + "' out of range, " + what);
  }
}

void validate(const PipelineConfig& c) {
  c.stft.validate();
  check_range(c.sound_speed > 0.0, "sound_speed", "must be positive");
  check_range(c.n_mics >= 2, "n_mics", "must be at least 2");
  check_range(c.array_radius > 0.0, "array_radius", "must be positive");
  check_range(c.band_count >= 1, "band_count", "must be at least 1");
  check_range(c.band_lo_hz >= 0.0 && c.band_hi_hz > c.band_lo_hz, "band_lo_hz",
              "need 0 <= band_lo_hz < band_hi_hz");
  check_range(c.alpha >= 0.0, "alpha", "must be nonnegative");
  check_range(c.beta >= 0.0, "beta", "must be nonnegative");
  check_range(c.gamma_lo >= 0.0 && c.gamma_lo <= 1.0, "gamma_lo",
              "must lie in [0, 1]");
  check_range(c.gamma_hi >= c.gamma_lo && c.gamma_hi <= 1.0, "gamma_hi",
              "must lie in [gamma_lo, 1]");
  check_range(c.theta_n_max_deg >= 0.0 && c.theta_n_max_deg <= 180.0,
              "theta_n_max_deg", "must lie in [0, 180]");
  check_range(c.n_slots >= 1 && c.n_slots <= 8, "n_slots", "must lie in [1, 8]");
  check_range(c.chunk_seconds > 0.0, "chunk_seconds", "must be positive");
  check_range(c.learning_rate > 0.0, "learning_rate", "must be positive");
  check_range(c.epochs >= 1, "epochs", "must be at least 1");
  check_range(c.batch_size >= 1, "batch_size", "must be at least 1");
  check_range(c.val_fraction >= 0.0 && c.val_fraction < 1.0, "val_fraction",
              "must lie in [0, 1)");
  check_range(c.hidden >= 1, "hidden", "must be at least 1");
  check_range(c.slot_embed >= 1, "slot_embed", "must be at least 1");
  check_range(c.context >= 0, "context", "must be nonnegative");
  check_range(c.threshold > 0.0 && c.threshold < 1.0, "threshold",
              "must lie strictly inside (0, 1)");
  check_range(c.min_on >= 0.0, "min_on", "must be nonnegative");
  check_range(c.max_gap >= 0.0, "max_gap", "must be nonnegative");
  check_range(c.collar >= 0.0, "collar", "must be nonnegative");
  check_range(c.doa_grid_step_deg > 0.0, "doa_grid_step_deg", "must be positive");
  check_range(c.doa_band_lo_hz >= 0.0 && c.doa_band_hi_hz > c.doa_band_lo_hz,
              "doa_band_lo_hz", "need 0 <= doa_band_lo_hz < doa_band_hi_hz");
  check_range(c.doa_min_duration >= 0.0, "doa_min_duration",
              "must be nonnegative");
}

}  // namespace

GeometrySpec PipelineConfig::geometry() const {
  if (!geometry_file.empty()) return load_geometry(geometry_file);
  GeometrySpec spec;
  spec.geometry = ArrayGeometry::circular(n_mics, array_radius, sound_speed);
  spec.pairs = default_pairs(n_mics);
  return spec;
}

FeatureExtractConfig PipelineConfig::feature_config() const {
  FeatureExtractConfig cfg;
  cfg.stft = stft;
  cfg.n_bands = band_count;
  cfg.band_lo_hz = band_lo_hz;
  cfg.band_hi_hz = band_hi_hz;
  cfg.n_slots = n_slots;
  return cfg;
}

DoaSearchConfig PipelineConfig::doa_config() const {
  DoaSearchConfig cfg;
  cfg.grid_step_deg = doa_grid_step_deg;
  cfg.band_lo_hz = doa_band_lo_hz;
  cfg.band_hi_hz = doa_band_hi_hz;
  cfg.min_duration = doa_min_duration;
  cfg.stft = stft;
  return cfg;
}

TrainConfig PipelineConfig::train_config() const {
  TrainConfig cfg;
  cfg.learning_rate = learning_rate;
  cfg.max_epochs = epochs;
  cfg.batch_size = batch_size;
  cfg.alpha = alpha;
  cfg.beta = beta;
  cfg.gamma_lo = gamma_lo;
  cfg.gamma_hi = gamma_hi;
  cfg.theta_n_max_deg = theta_n_max_deg;
  cfg.chunk_seconds = chunk_seconds;
  cfg.val_fraction = val_fraction;
  cfg.hidden = hidden;
  cfg.slot_embed = slot_embed;
  cfg.context = context;
  cfg.n_slots = n_slots;
  return cfg;
}

PipelineConfig parse_config(const std::string& text, const std::string& origin) {
  const KeyValueFile file = KeyValueFile::parse_string(text, origin);
  file.check_known(kKnownKeys);

  PipelineConfig c;
  c.stft.window_len = file.get_int_or("stft_window_len", c.stft.window_len);
  c.stft.hop = file.get_int_or("stft_hop", c.stft.hop);
  c.stft.fft_size = file.get_int_or("stft_fft_size", c.stft.fft_size);
  const std::string window = file.get_or("stft_window", "hann");
  if (window == "hann") {
    c.stft.window = WindowKind::kHann;
  } else if (window == "hamming") {
    c.stft.window = WindowKind::kHamming;
  } else if (window == "rect") {
    c.stft.window = WindowKind::kRect;
  } else {
    raise(ErrorCode::kInvalidArgument,
          "config: 'stft_window' must be hann, hamming, or rect");
  }
  c.sound_speed = file.get_double_or("sound_speed", c.sound_speed);
  c.n_mics = file.get_int_or("n_mics", c.n_mics);
  c.array_radius = file.get_double_or("array_radius", c.array_radius);
  c.geometry_file = file.get_or("geometry_file", c.geometry_file);
  c.band_count = file.get_int_or("band_count", c.band_count);
  c.band_lo_hz = file.get_double_or("band_lo_hz", c.band_lo_hz);
  c.band_hi_hz = file.get_double_or("band_hi_hz", c.band_hi_hz);
  c.alpha = file.get_double_or("alpha", c.alpha);
  c.beta = file.get_double_or("beta", c.beta);
  c.gamma_lo = file.get_double_or("gamma_lo", c.gamma_lo);
  c.gamma_hi = file.get_double_or("gamma_hi", c.gamma_hi);
  c.theta_n_max_deg = file.get_double_or("theta_n_max_deg", c.theta_n_max_deg);
  c.n_slots = file.get_int_or("n_slots", c.n_slots);
  c.chunk_seconds = file.get_double_or("chunk_seconds", c.chunk_seconds);
  c.learning_rate = file.get_double_or("learning_rate", c.learning_rate);
  c.epochs = file.get_int_or("epochs", c.epochs);
  c.batch_size = file.get_int_or("batch_size", c.batch_size);
  c.val_fraction = file.get_double_or("val_fraction", c.val_fraction);
  c.hidden = file.get_int_or("hidden", c.hidden);
  c.slot_embed = file.get_int_or("slot_embed", c.slot_embed);
  c.context = file.get_int_or("context", c.context);
  c.threshold = file.get_double_or("threshold", c.threshold);
  c.min_on = file.get_double_or("min_on", c.min_on);
  c.max_gap = file.get_double_or("max_gap", c.max_gap);
  c.collar = file.get_double_or("collar", c.collar);
  c.doa_grid_step_deg = file.get_double_or("doa_grid_step_deg", c.doa_grid_step_deg);
  c.doa_band_lo_hz = file.get_double_or("doa_band_lo_hz", c.doa_band_lo_hz);
  c.doa_band_hi_hz = file.get_double_or("doa_band_hi_hz", c.doa_band_hi_hz);
  c.doa_min_duration = file.get_double_or("doa_min_duration", c.doa_min_duration);

  validate(c);
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    raise(ErrorCode::kMissingFile, "no such config file: " + path.string());
  }
  std::ifstream in(path);
  if (!in) raise(ErrorCode::kMissingFile, "cannot open: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string dump_config(const PipelineConfig& c) {
  std::string window = "hann";
  if (c.stft.window == WindowKind::kHamming) window = "hamming";
  if (c.stft.window == WindowKind::kRect) window = "rect";

  char buf[4096];
  std::snprintf(
      buf, sizeof(buf),
      "stft_window_len %d\n"
      "stft_hop %d\n"
      "stft_fft_size %d\n"
      "stft_window %s\n"
      "sound_speed %g\n"
      "n_mics %d\n"
      "array_radius %g\n"
      "geometry_file %s\n"
      "band_count %d\n"
      "band_lo_hz %g\n"
      "band_hi_hz %g\n"
      "alpha %g\n"
      "beta %g\n"
      "gamma_lo %g\n"
      "gamma_hi %g\n"
      "theta_n_max_deg %g\n"
      "n_slots %d\n"
      "chunk_seconds %g\n"
      "learning_rate %g\n"
      "epochs %d\n"
      "batch_size %d\n"
      "val_fraction %g\n"
      "hidden %d\n"
      "slot_embed %d\n"
      "context %d\n"
      "threshold %g\n"
      "min_on %g\n"
      "max_gap %g\n"
      "collar %g\n"
      "doa_grid_step_deg %g\n"
      "doa_band_lo_hz %g\n"
      "doa_band_hi_hz %g\n"
      "doa_min_duration %g\n",
      c.stft.window_len, c.stft.hop, c.stft.fft_size, window.c_str(),
      c.sound_speed, c.n_mics, c.array_radius,
      c.geometry_file.empty() ? "<none>" : c.geometry_file.c_str(), c.band_count,
      c.band_lo_hz, c.band_hi_hz, c.alpha, c.beta, c.gamma_lo, c.gamma_hi,
      c.theta_n_max_deg, c.n_slots, c.chunk_seconds, c.learning_rate, c.epochs,
      c.batch_size, c.val_fraction, c.hidden, c.slot_embed, c.context,
      c.threshold, c.min_on, c.max_gap, c.collar, c.doa_grid_step_deg,
      c.doa_band_lo_hz, c.doa_band_hi_hz, c.doa_min_duration);
  return buf;
}

}  // namespace arraydiar
