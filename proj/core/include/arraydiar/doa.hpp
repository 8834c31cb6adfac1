// core/include/arraydiar/doa.hpp

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

#include <span>
#include <string>
#include <vector>

#include "arraydiar/annotations.hpp"
#include "arraydiar/audio.hpp"
#include "arraydiar/spatial.hpp"

namespace arraydiar {

struct DoaEstimate {
  std::string speaker;
  double theta_deg = 0.0;
  double score = 0.0;        // steered response at the estimate
  double confidence = 0.0;   // peak minus median of the response curve
  double segment_seconds = 0.0;
};

/// Single-speaker portions of the speaker's segments, overlap removed, with
/// duration >= min_duration. Raises on an unknown speaker.
std::vector<Interval> pool_speaker_segments(const Annotation& annotation,
                                            const std::string& speaker,
                                            double min_duration);

struct DoaSearchConfig {
  double grid_step_deg = 1.0;  // must divide 360
  double band_lo_hz = 300.0;   // scoring band, clear of low-frequency noise
  double band_hi_hz = 3400.0;  // and of severe spatial aliasing
  double min_duration = 0.5;
  StftConfig stft;
};

/// Mean normalized angle feature per grid direction over the pooled frames
/// and the scoring band. One value per grid point starting at 0 degrees.
std::vector<double> steered_response(const ChannelSpectrogram& spec,
                                     const ArrayGeometry& geom,
                                     std::span<const MicPair> pairs,
                                     std::span<const Interval> segments,
                                     const DoaSearchConfig& cfg);

/// Grid search over the steered response. Near-tied scores resolve
/// deterministically to the smallest direction.
DoaEstimate estimate_doa(const MultiChannelAudio& audio, const ArrayGeometry& geom,
                         std::span<const MicPair> pairs,
                         std::span<const Interval> segments,
                         const DoaSearchConfig& cfg = {});

}  // namespace arraydiar
