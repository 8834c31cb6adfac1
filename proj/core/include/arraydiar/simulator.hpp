// core/include/arraydiar/simulator.hpp

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
#include <optional>
#include <vector>

#include "arraydiar/annotations.hpp"
#include "arraydiar/audio.hpp"
#include "arraydiar/profile.hpp"
#include "arraydiar/spatial.hpp"

namespace arraydiar {

enum class SourceKind { kNoise, kTones };

/// Far-field scene description. DOAs may be pinned explicitly or drawn
/// uniformly with a minimum pairwise separation.
struct SceneConfig {
  int n_speakers = 2;  // 2..4
  std::vector<double> doas_deg;  // empty -> random with min_separation_deg
  double min_separation_deg = 60.0;
  double target_overlap_ratio = 0.35;
  double duration_s = 12.0;
  std::optional<double> snr_db;  // empty -> noiseless
  SourceKind source = SourceKind::kNoise;
  int sample_rate = 16000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Scene config file keys: n_speakers, duration, overlap_ratio, doas,
/// min_separation, snr_db, source, sample_rate, seed.
SceneConfig load_scene_config(const std::filesystem::path& path);

/// Ground truth bundle produced by the synthesizer.
struct SceneTruth {
  Annotation annotation;
  std::vector<SpeakerProfile> profiles;
  MultiChannelAudio audio;
};

/// Plane-wave scene synthesis. Sources are per-speaker tinted noise or tone
/// bursts; each microphone sees the source through the exact far-field delay
/// (analytic for tones, windowed-sinc interpolation for noise). The realized
/// overlap ratio lands within 0.05 of the target or the call fails with
/// kInvalidArgument. Deterministic given config.seed.
SceneTruth synthesize_scene(const SceneConfig& config, const ArrayGeometry& geom);
SceneTruth synthesize_scene(const SceneConfig& config);

/// A slice of audio with its labels, the unit the mixing augmentation
/// operates on.
struct AudioChunk {
  MultiChannelAudio audio;
  Annotation labels;
};

/// Sums two equally-shaped chunks after scaling b so that
/// rms(a)/rms(scaled b) = 10^(ssr_db/20); labels are unioned. A silent chunk
/// raises kInvalidArgument because the ratio is undefined.
AudioChunk overlap_mix_augment(const AudioChunk& a, const AudioChunk& b,
                               double ssr_db);

}  // namespace arraydiar
