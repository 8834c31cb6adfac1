// core/src/doa.cpp

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

#include "arraydiar/doa.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "arraydiar/error.hpp"

namespace arraydiar {

std::vector<Interval> pool_speaker_segments(const Annotation& annotation,
                                            const std::string& speaker,
                                            double min_duration) {
  const auto speakers = annotation.speakers();
  require(std::find(speakers.begin(), speakers.end(), speaker) != speakers.end(),
          ErrorCode::kInvalidArgument,
          "pool_speaker_segments: unknown speaker '" + speaker + "'");

  const auto own = annotation.speaker_intervals(speaker);
  std::vector<Interval> others;
  for (const auto& other : speakers) {
    if (other == speaker) continue;
    const auto ivs = annotation.speaker_intervals(other);
    others.insert(others.end(), ivs.begin(), ivs.end());
  }
  auto solo = subtract_intervals(own, others);
  std::erase_if(solo,
                [&](const Interval& iv) { return iv.length() < min_duration; });
  return solo;
}

std::vector<double> steered_response(const ChannelSpectrogram& spec,
                                     const ArrayGeometry& geom,
                                     std::span<const MicPair> pairs,
                                     std::span<const Interval> segments,
                                     const DoaSearchConfig& cfg) {
  require(!pairs.empty(), ErrorCode::kInvalidArgument,
          "steered_response: empty pair list");
  require(cfg.grid_step_deg > 0.0, ErrorCode::kInvalidArgument,
          "steered_response: grid step must be positive");
  const double steps = 360.0 / cfg.grid_step_deg;
  require(std::fabs(steps - std::round(steps)) < 1e-9, ErrorCode::kInvalidArgument,
          "steered_response: grid step must divide 360");
  require(!segments.empty(), ErrorCode::kInvalidArgument,
          "steered_response: no pooled segments");

  // Frames whose centers fall inside a pooled segment.
  std::vector<std::size_t> frames;
  for (std::size_t t = 0; t < spec.frame_count; ++t) {
    const double center = spec.frame_center_seconds(t);
    for (const Interval& iv : segments) {
      if (center >= iv.begin && center < iv.end) {
        frames.push_back(t);
        break;
      }
    }
  }
  require(!frames.empty(), ErrorCode::kInvalidArgument,
          "steered_response: pooled segments cover no frames");
  const double audio_span =
      static_cast<double>(spec.frame_count) * spec.hop_seconds() +
      static_cast<double>(spec.window_len) / spec.sample_rate;
  for (const Interval& iv : segments) {
    require(iv.begin >= 0.0 && iv.begin < audio_span, ErrorCode::kInvalidArgument,
            "steered_response: segment outside the audio span");
  }

  std::size_t f_lo = spec.bin_count, f_hi = 0;
  for (std::size_t f = 0; f < spec.bin_count; ++f) {
    const double hz = spec.bin_hz(f);
    if (hz >= cfg.band_lo_hz && hz <= cfg.band_hi_hz) {
      f_lo = std::min(f_lo, f);
      f_hi = std::max(f_hi, f);
    }
  }
  require(f_lo <= f_hi, ErrorCode::kInvalidArgument,
          "steered_response: scoring band holds no bins");
  const std::size_t n_band = f_hi - f_lo + 1;

  // Per-pair normalized cross-spectrum averaged over the pooled frames. The
  // response at theta is then mean_f cos(steer) * C + sin(steer) * S, which
  // equals the mean normalized angle feature because the steering phase does
  // not depend on t.
  const std::size_t n_pairs = pairs.size();
  std::vector<double> mean_cos(n_pairs * n_band, 0.0);
  std::vector<double> mean_sin(n_pairs * n_band, 0.0);
  for (std::size_t p = 0; p < n_pairs; ++p) {
    const MicPair pair = pairs[p];
    require(pair.m1 >= 0 && pair.m1 < spec.channel_count() && pair.m2 >= 0 &&
                pair.m2 < spec.channel_count(),
            ErrorCode::kInvalidArgument, "steered_response: pair out of range");
    const auto& x1 = spec.values[static_cast<std::size_t>(pair.m1)];
    const auto& x2 = spec.values[static_cast<std::size_t>(pair.m2)];
    for (const std::size_t t : frames) {
      const std::size_t base = t * spec.bin_count;
      for (std::size_t f = 0; f < n_band; ++f) {
        const std::complex<double> cross =
            x1[base + f_lo + f] * std::conj(x2[base + f_lo + f]);
        const double mag = std::abs(cross);
        if (mag > 0.0) {
          mean_cos[p * n_band + f] += cross.real() / mag;
          mean_sin[p * n_band + f] += cross.imag() / mag;
        } else {
          mean_cos[p * n_band + f] += 1.0;
        }
      }
    }
  }
  const double inv_frames = 1.0 / static_cast<double>(frames.size());
  for (double& v : mean_cos) v *= inv_frames;
  for (double& v : mean_sin) v *= inv_frames;

  const std::size_t n_grid = static_cast<std::size_t>(std::llround(steps));
  std::vector<double> response(n_grid, 0.0);
  const double norm = 1.0 / (static_cast<double>(n_pairs) * static_cast<double>(n_band));
  for (std::size_t g = 0; g < n_grid; ++g) {
    const double theta = static_cast<double>(g) * cfg.grid_step_deg;
    double sum = 0.0;
    for (std::size_t p = 0; p < n_pairs; ++p) {
      for (std::size_t f = 0; f < n_band; ++f) {
        const double phase =
            steering_phase(geom, pairs[p], theta, spec.bin_hz(f_lo + f));
        sum += std::cos(phase) * mean_cos[p * n_band + f] +
               std::sin(phase) * mean_sin[p * n_band + f];
      }
    }
    response[g] = sum * norm;
  }
  return response;
}

DoaEstimate estimate_doa(const MultiChannelAudio& audio, const ArrayGeometry& geom,
                         std::span<const MicPair> pairs,
                         std::span<const Interval> segments,
                         const DoaSearchConfig& cfg) {
  const ChannelSpectrogram spec = stft(audio, cfg.stft);
  const auto response = steered_response(spec, geom, pairs, segments, cfg);

  // Argmax with near-ties (within 1e-9) resolved to the smallest direction.
  double best = response[0];
  for (const double v : response) best = std::max(best, v);
  std::size_t arg = 0;
  for (std::size_t g = 0; g < response.size(); ++g) {
    if (response[g] >= best - 1e-9) {
      arg = g;
      break;
    }
  }

  std::vector<double> sorted(response.begin(), response.end());
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];

  DoaEstimate est;
  est.theta_deg = static_cast<double>(arg) * cfg.grid_step_deg;
  est.score = response[arg];
  est.confidence = best - median;
  est.segment_seconds = total_length(segments);
  return est;
}

}  // namespace arraydiar
