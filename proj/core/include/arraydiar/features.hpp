// core/include/arraydiar/features.hpp

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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "arraydiar/audio.hpp"
#include "arraydiar/matrix.hpp"
#include "arraydiar/profile.hpp"
#include "arraydiar/spatial.hpp"

namespace arraydiar {

/// Mel-spaced band averaging plan over STFT bins.
struct BandPlan {
  int n_bands = 16;
  std::vector<std::size_t> edges;  // n_bands + 1 ascending bin indices

  static BandPlan mel(int n_bands, double lo_hz, double hi_hz, int fft_size,
                      int sample_rate);
};

/// T x F -> T x B, mean per band.
Matrix pool_bands(const Matrix& tf, const BandPlan& plan);

/// One model slot: an enrolled (or virtual filler) speaker with its pooled
/// angle feature, direction, angular margin, and embedding.
struct SlotFeatures {
  std::string name;
  double theta_deg = 0.0;
  double delta_theta_deg = 180.0;
  bool is_virtual = false;
  Matrix af;  // T x B, values in [-1, 1]
  std::vector<double> embedding;  // kEmbeddingDim
};

/// Per-frame fused model input: band-pooled LPS shared across slots plus one
/// SlotFeatures per output port.
struct FusedFeatures {
  std::string session = "session";
  double hop_seconds = 0.01;
  int n_bands = 16;
  Matrix acoustic;  // T x B, mean/variance normalized per band
  std::vector<SlotFeatures> slots;

  std::size_t frames() const { return acoustic.rows(); }
  int n_slots() const { return static_cast<int>(slots.size()); }
  int input_dim() const { return 2 * n_bands + 1 + kEmbeddingDim; }
  int real_count() const;
};

/// Pooled angle feature at an arbitrary direction, used to fill virtual
/// slots whose directions are only known at assembly time.
using AfProvider = std::function<Matrix(double theta_deg)>;

/// Joint placement of `count` virtual directions on a grid, maximizing the
/// minimum circular distance over all pairs that involve a virtual
/// direction. Ties resolve to the lexicographically smallest tuple.
std::vector<double> choose_virtual_doas(std::span<const double> real_thetas_deg,
                                        int count, double grid_step_deg = 1.0);

/// Deterministic filler-embedding pool, disjoint from any scene speaker.
std::vector<double> virtual_speaker_embedding(int index);

/// Fills n_slots ports: real speakers first, in the given order, then
/// virtual fillers with pool embeddings and max-separation directions.
/// More real speakers than slots is an error. The acoustic input is
/// normalized here (per-band mean/variance over the given frames).
FusedFeatures assemble_features(const Matrix& lps_bands,
                                const std::vector<Matrix>& af,
                                std::span<const double> thetas_deg,
                                std::span<const double> delta_thetas_deg,
                                const std::vector<std::vector<double>>& embeddings,
                                std::span<const std::string> names, int n_slots,
                                const AfProvider& af_provider,
                                double hop_seconds,
                                const std::string& session = "session");

struct FeatureExtractConfig {
  StftConfig stft;
  int n_bands = 16;
  double band_lo_hz = 125.0;
  double band_hi_hz = 7600.0;
  int n_slots = 4;
  int lps_channel = 0;
};

/// Full front end: STFT, LPS, per-profile angle features, band pooling, and
/// slot assembly. Profiles must carry embeddings.
FusedFeatures extract_features(const MultiChannelAudio& audio,
                               const GeometrySpec& geometry,
                               const std::vector<SpeakerProfile>& profiles,
                               const FeatureExtractConfig& cfg,
                               const std::string& session = "session");

/// Versioned feature container: text header, then a raw little-endian
/// float64 payload.
void save_features(const FusedFeatures& features,
                   const std::filesystem::path& path);
FusedFeatures load_features(const std::filesystem::path& path);

}  // namespace arraydiar
