// core/src/simulator.cpp

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

#include "arraydiar/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "arraydiar/error.hpp"
#include "arraydiar/io.hpp"
#include "arraydiar/rng.hpp"

namespace arraydiar {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kRampSeconds = 0.02;
// Adjacent turns may overlap by at most this fraction of the shorter turn;
// keeping it below 0.5 guarantees a turn never overlaps its next-but-one
// neighbour (which can be the same speaker).
constexpr double kOverlapCap = 0.48;
constexpr double kGapProbability = 0.05;
constexpr int kSincHalfTaps = 16;       // 2*K+2 tap windowed-sinc interpolator

// Smooth per-speaker spectral tint. The same parameters drive the source
// filter and the speaker embedding, so embeddings carry recoverable
// information about the source spectrum.
struct Tint {
  std::array<double, 4> amp{};
  std::array<double, 4> phase{};

  double log_envelope(double unit_freq) const {
    double v = 0.0;
    for (std::size_t h = 0; h < amp.size(); ++h) {
      v += amp[h] * std::cos(std::numbers::pi * static_cast<double>(h + 1) *
                                 unit_freq +
                             phase[h]);
    }
    return v;
  }
};

constexpr double kBandLoHz = 180.0;
constexpr double kBandHiHz = 3900.0;
constexpr double kBandEdgeHz = 120.0;

double band_weight(double hz) {
  if (hz <= kBandLoHz || hz >= kBandHiHz) return 0.0;
  double w = 1.0;
  if (hz < kBandLoHz + kBandEdgeHz) {
    const double u = (hz - kBandLoHz) / kBandEdgeHz;
    w *= 0.5 - 0.5 * std::cos(std::numbers::pi * u);
  }
  if (hz > kBandHiHz - kBandEdgeHz) {
    const double u = (kBandHiHz - hz) / kBandEdgeHz;
    w *= 0.5 - 0.5 * std::cos(std::numbers::pi * u);
  }
  return w;
}

double tint_magnitude(const Tint& tint, double hz) {
  const double unit = std::clamp((hz - kBandLoHz) / (kBandHiHz - kBandLoHz), 0.0, 1.0);
  return std::exp(tint.log_envelope(unit)) * band_weight(hz);
}

Tint draw_tint(Rng& rng) {
  Tint tint;
  for (std::size_t h = 0; h < tint.amp.size(); ++h) {
    tint.amp[h] = rng.uniform(0.3, 0.9) / static_cast<double>(h + 1);
    tint.phase[h] = rng.uniform(0.0, kTwoPi);
  }
  return tint;
}

std::vector<double> tint_embedding(const Tint& tint) {
  std::vector<double> emb(static_cast<std::size_t>(kEmbeddingDim));
  double norm = 0.0;
  for (int j = 0; j < kEmbeddingDim; ++j) {
    const double u = (static_cast<double>(j) + 0.5) / kEmbeddingDim;
    emb[static_cast<std::size_t>(j)] = tint.log_envelope(u);
    norm += emb[static_cast<std::size_t>(j)] * emb[static_cast<std::size_t>(j)];
  }
  norm = std::sqrt(norm);
  if (norm < 1e-9) {
    emb.assign(emb.size(), 0.0);
    emb[0] = 1.0;
    return emb;
  }
  for (double& v : emb) v /= norm;
  return emb;
}

// 65-tap linear-phase FIR matching the tint magnitude, designed by frequency
// sampling on a 128-point grid.
std::vector<double> design_tint_fir(const Tint& tint, int sample_rate) {
  constexpr std::size_t kGrid = 128;
  constexpr std::size_t kTaps = 65;
  std::vector<double> mag(kGrid / 2 + 1);
  for (std::size_t k = 0; k < mag.size(); ++k) {
    mag[k] = tint_magnitude(tint, static_cast<double>(k) * sample_rate / kGrid);
  }
  std::vector<double> taps(kTaps, 0.0);
  const double center = (kTaps - 1) / 2.0;
  for (std::size_t n = 0; n < kTaps; ++n) {
    double acc = mag[0];
    for (std::size_t k = 1; k < mag.size(); ++k) {
      const double scale = (k == kGrid / 2) ? 1.0 : 2.0;
      acc += scale * mag[k] *
             std::cos(kTwoPi * static_cast<double>(k) *
                      (static_cast<double>(n) - center) / kGrid);
    }
    const double hann =
        0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(n) / (kTaps - 1));
    taps[n] = hann * acc / kGrid;
  }
  return taps;
}

struct Turn {
  int speaker = 0;
  double length = 0.0;
};

struct PlacedTurn {
  int speaker = 0;
  double onset = 0.0;
  double length = 0.0;
};

struct TurnPlan {
  std::vector<Turn> turns;
  std::vector<double> overlap_fraction;  // per boundary, in [0.5, 1]
  std::vector<bool> gap_boundary;
  std::vector<double> gap_length;
};

std::vector<PlacedTurn> place_turns(const TurnPlan& plan, double x,
                                    double duration) {
  std::vector<PlacedTurn> placed;
  double cursor = 0.0;
  for (std::size_t k = 0; k < plan.turns.size(); ++k) {
    if (k > 0) {
      const double prev_len = plan.turns[k - 1].length;
      const double len = plan.turns[k].length;
      if (plan.gap_boundary[k - 1] || x <= 0.0) {
        // Pauses shrink as the overlap demand rises; dense-overlap meetings
        // have little dead air.
        cursor += plan.gap_length[k - 1] * std::max(0.0, 1.0 - x);
      } else {
        const double fraction =
            std::min(x * plan.overlap_fraction[k - 1], kOverlapCap);
        cursor -= fraction * std::min(prev_len, len);
      }
    }
    if (cursor >= duration) break;
    const double length = std::min(plan.turns[k].length, duration - cursor);
    if (length >= 0.3) {
      placed.push_back({plan.turns[k].speaker, cursor, length});
    }
    cursor += plan.turns[k].length;
  }
  return placed;
}

Annotation turns_to_annotation(const std::vector<PlacedTurn>& placed,
                               int n_speakers) {
  Annotation ann;
  for (const PlacedTurn& turn : placed) {
    ann.segments.push_back({"spk" + std::to_string(turn.speaker + 1), turn.onset,
                            turn.length});
  }
  (void)n_speakers;
  return ann.normalized();
}

std::vector<double> draw_doas(const SceneConfig& config, Rng& rng) {
  if (!config.doas_deg.empty()) {
    require(static_cast<int>(config.doas_deg.size()) == config.n_speakers,
            ErrorCode::kInvalidArgument,
            "scene: doas count must match n_speakers");
    std::vector<double> out;
    for (const double d : config.doas_deg) out.push_back(wrap_degrees(d));
    return out;
  }
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<double> doas;
    for (int i = 0; i < config.n_speakers; ++i) doas.push_back(rng.uniform(0.0, 360.0));
    bool ok = true;
    for (std::size_t i = 0; i < doas.size() && ok; ++i) {
      for (std::size_t j = i + 1; j < doas.size(); ++j) {
        if (circular_distance_deg(doas[i], doas[j]) < config.min_separation_deg) {
          ok = false;
          break;
        }
      }
    }
    if (ok) return doas;
  }
  raise(ErrorCode::kInvalidArgument,
        "scene: cannot place " + std::to_string(config.n_speakers) +
            " speakers with min separation " +
            std::to_string(config.min_separation_deg));
}

// Raised-cosine gate that is 1 inside each turn (with kRampSeconds edges
// kept inside the segment) and 0 elsewhere.
std::vector<float> make_gate(const std::vector<PlacedTurn>& placed, int speaker,
                             std::size_t n_samples, int sample_rate) {
  std::vector<float> gate(n_samples, 0.0f);
  const double ramp = kRampSeconds;
  for (const PlacedTurn& turn : placed) {
    if (turn.speaker != speaker) continue;
    const double t0 = turn.onset;
    const double t1 = turn.onset + turn.length;
    const double r = std::min(ramp, turn.length / 4.0);
    const std::size_t lo = static_cast<std::size_t>(
        std::max(0.0, std::floor(t0 * sample_rate)));
    const std::size_t hi = std::min<std::size_t>(
        n_samples, static_cast<std::size_t>(std::ceil(t1 * sample_rate)));
    for (std::size_t n = lo; n < hi; ++n) {
      const double t = static_cast<double>(n) / sample_rate;
      double g = 0.0;
      if (t >= t0 && t < t1) {
        g = 1.0;
        if (t < t0 + r) g = 0.5 - 0.5 * std::cos(std::numbers::pi * (t - t0) / r);
        if (t > t1 - r) {
          g = std::min(g, 0.5 - 0.5 * std::cos(std::numbers::pi * (t1 - t) / r));
        }
      }
      gate[n] = std::max(gate[n], static_cast<float>(g));
    }
  }
  return gate;
}

void fir_filter(const std::vector<float>& in, const std::vector<double>& taps,
                std::vector<float>& out) {
  out.assign(in.size(), 0.0f);
  const std::ptrdiff_t n_taps = static_cast<std::ptrdiff_t>(taps.size());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(in.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    const std::ptrdiff_t j_lo = std::max<std::ptrdiff_t>(0, i - n + 1);
    const std::ptrdiff_t j_hi = std::min<std::ptrdiff_t>(n_taps - 1, i);
    for (std::ptrdiff_t j = j_lo; j <= j_hi; ++j) {
      acc += taps[static_cast<std::size_t>(j)] * in[static_cast<std::size_t>(i - j)];
    }
    out[static_cast<std::size_t>(i)] = static_cast<float>(acc);
  }
}

// Fractional-delay taps: windowed sinc evaluated at d - frac for
// d in [-K, K+1].
std::vector<double> fractional_delay_taps(double frac) {
  const int k = kSincHalfTaps;
  std::vector<double> taps(static_cast<std::size_t>(2 * k + 2));
  for (int d = -k; d <= k + 1; ++d) {
    const double t = static_cast<double>(d) - frac;
    double sinc = 1.0;
    if (t != 0.0) {
      sinc = std::sin(std::numbers::pi * t) / (std::numbers::pi * t);
    }
    const double u = t / (k + 1);
    const double window = std::fabs(u) < 1.0 ? 0.5 + 0.5 * std::cos(std::numbers::pi * u)
                                             : 0.0;
    taps[static_cast<std::size_t>(d + k)] = sinc * window;
  }
  return taps;
}

void add_delayed(const std::vector<float>& src, double delay_samples,
                 std::vector<float>& dst) {
  const double floor_delay = std::floor(delay_samples);
  const int d0 = static_cast<int>(floor_delay);
  const double frac = delay_samples - floor_delay;
  const auto taps = fractional_delay_taps(frac);
  const int k = kSincHalfTaps;
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(src.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int d = -k; d <= k + 1; ++d) {
      const std::ptrdiff_t j = i - d0 - d;
      if (j < 0 || j >= n) continue;
      acc += taps[static_cast<std::size_t>(d + k)] * src[static_cast<std::size_t>(j)];
    }
    dst[static_cast<std::size_t>(i)] += static_cast<float>(acc);
  }
}

struct ToneSet {
  std::vector<double> freq_hz;
  std::vector<double> amp;
  std::vector<double> phase;
};

ToneSet draw_tones(const Tint& tint, int sample_rate, Rng& rng) {
  // Bin-centered frequencies for a 512-point analysis at this rate, spaced
  // at least 4 bins apart so windowed frames keep the tones separable.
  constexpr int kToneCount = 10;
  std::vector<int> candidates;
  for (int bin = 10; bin <= 106; bin += 4) candidates.push_back(bin);
  rng.shuffle(candidates);
  ToneSet tones;
  for (int i = 0; i < kToneCount; ++i) {
    const double hz = static_cast<double>(candidates[static_cast<std::size_t>(i)]) *
                      sample_rate / 512.0;
    tones.freq_hz.push_back(hz);
    tones.amp.push_back(std::max(tint_magnitude(tint, hz), 0.05));
    tones.phase.push_back(rng.uniform(0.0, kTwoPi));
  }
  double power = 0.0;
  for (const double a : tones.amp) power += 0.5 * a * a;
  const double scale = 1.0 / std::sqrt(std::max(power, 1e-12));
  for (double& a : tones.amp) a *= scale;
  return tones;
}

double active_rms(const std::vector<float>& samples, const std::vector<float>& gate) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (gate[i] > 0.5f) {
      sum += static_cast<double>(samples[i]) * samples[i];
      ++count;
    }
  }
  return count > 0 ? std::sqrt(sum / static_cast<double>(count)) : 0.0;
}

}  // namespace

void SceneConfig::validate() const {
  require(n_speakers >= 2 && n_speakers <= 4, ErrorCode::kInvalidArgument,
          "scene: n_speakers must lie in [2, 4]");
  require(target_overlap_ratio >= 0.0 && target_overlap_ratio < 1.0,
          ErrorCode::kInvalidArgument, "scene: overlap ratio must lie in [0, 1)");
  require(duration_s > 0.0, ErrorCode::kInvalidArgument,
          "scene: duration must be positive");
  require(sample_rate > 0, ErrorCode::kInvalidArgument,
          "scene: sample_rate must be positive");
}

SceneConfig load_scene_config(const std::filesystem::path& path) {
  const KeyValueFile file = KeyValueFile::parse_file(path);
  file.check_known({"n_speakers", "duration", "overlap_ratio", "doas",
                    "min_separation", "snr_db", "source", "sample_rate", "seed"});
  SceneConfig config;
  config.n_speakers = file.get_int_or("n_speakers", config.n_speakers);
  config.duration_s = file.get_double_or("duration", config.duration_s);
  config.target_overlap_ratio =
      file.get_double_or("overlap_ratio", config.target_overlap_ratio);
  config.min_separation_deg =
      file.get_double_or("min_separation", config.min_separation_deg);
  if (file.has("doas")) {
    const std::string& value = file.get("doas");
    if (value != "random") {
      config.doas_deg = parse_double_list(value, file.origin() + ": doas");
    }
  }
  if (file.has("snr_db")) {
    const std::string& value = file.get("snr_db");
    if (value != "none") config.snr_db = file.get_double("snr_db");
  }
  const std::string source = file.get_or("source", "noise");
  if (source == "noise") {
    config.source = SourceKind::kNoise;
  } else if (source == "tones") {
    config.source = SourceKind::kTones;
  } else {
    raise(ErrorCode::kMalformedFile,
          file.origin() + ": source must be 'noise' or 'tones', got '" + source + "'");
  }
  config.sample_rate = file.get_int_or("sample_rate", config.sample_rate);
  config.seed = file.get_u64_or("seed", config.seed);
  config.validate();
  return config;
}

SceneTruth synthesize_scene(const SceneConfig& config) {
  return synthesize_scene(config, default_geometry().geometry);
}

SceneTruth synthesize_scene(const SceneConfig& config, const ArrayGeometry& geom) {
  config.validate();
  geom.validate();
  Rng rng(mix_seed(config.seed, 0x5ce11e));

  const std::vector<double> doas = draw_doas(config, rng);

  // Per-speaker generative parameters, drawn in a fixed order.
  std::vector<Tint> tints;
  std::vector<std::uint64_t> source_seeds;
  for (int i = 0; i < config.n_speakers; ++i) {
    tints.push_back(draw_tint(rng));
    source_seeds.push_back(rng.next_u64());
  }

  // Turn sequence long enough to cover the scene even at maximal overlap
  // compression. Adjacent turns always belong to different speakers.
  TurnPlan plan;
  {
    std::vector<int> order;
    double raw_total = 0.0;
    while (raw_total < 2.2 * config.duration_s + 8.0) {
      if (order.empty()) {
        std::vector<int> round;
        for (int i = 0; i < config.n_speakers; ++i) round.push_back(i);
        rng.shuffle(round);
        if (!plan.turns.empty() && round.front() == plan.turns.back().speaker) {
          std::swap(round.front(), round.back());
        }
        order = round;
      }
      const int speaker = order.front();
      order.erase(order.begin());
      const double length = std::clamp(rng.exponential(1.5), 1.0, 2.2);
      plan.turns.push_back({speaker, length});
      raw_total += length;
    }
    for (std::size_t k = 0; k + 1 < plan.turns.size(); ++k) {
      plan.overlap_fraction.push_back(rng.uniform(0.55, 1.0));
      plan.gap_boundary.push_back(rng.bernoulli(kGapProbability) ||
                                  config.target_overlap_ratio <= 0.0);
      plan.gap_length.push_back(std::clamp(rng.exponential(0.25), 0.05, 0.6));
    }
  }

  // Solve the overlap knob by bisection; the realized ratio is monotone in x
  // away from trimming effects.
  double x = 0.0;
  if (config.target_overlap_ratio > 0.0) {
    auto realized = [&](double knob) {
      const auto placed = place_turns(plan, knob, config.duration_s);
      const Annotation ann = turns_to_annotation(placed, config.n_speakers);
      return ann.segments.empty() ? 0.0 : overlap_ratio(ann);
    };
    double lo = 0.0, hi = 1.0;
    const double max_realized = realized(1.0);
    if (max_realized + 0.04 < config.target_overlap_ratio) {
      raise(ErrorCode::kInvalidArgument,
            "scene: overlap target " + std::to_string(config.target_overlap_ratio) +
                " is infeasible for this turn model (max realizable " +
                std::to_string(max_realized) + ")");
    }
    for (int iter = 0; iter < 48; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (realized(mid) < config.target_overlap_ratio) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    x = 0.5 * (lo + hi);
  }

  const auto placed = place_turns(plan, x, config.duration_s);
  SceneTruth truth;
  truth.annotation = turns_to_annotation(placed, config.n_speakers);
  truth.annotation.session = "scene";
  {
    const double realized = overlap_ratio(truth.annotation);
    require(std::fabs(realized - config.target_overlap_ratio) <= 0.05,
            ErrorCode::kInvalidArgument,
            "scene: overlap target " + std::to_string(config.target_overlap_ratio) +
                " is infeasible (realized " + std::to_string(realized) + ")");
  }

  const std::size_t n_samples = static_cast<std::size_t>(
      std::llround(config.duration_s * config.sample_rate));
  const int n_mics = geom.mic_count();

  MultiChannelAudio audio;
  audio.sample_rate = config.sample_rate;
  audio.channels.assign(static_cast<std::size_t>(n_mics),
                        std::vector<float>(n_samples, 0.0f));

  const auto deltas = min_angular_difference(doas);

  for (int i = 0; i < config.n_speakers; ++i) {
    SpeakerProfile profile;
    profile.id = "spk" + std::to_string(i + 1);
    profile.theta_deg = doas[static_cast<std::size_t>(i)];
    profile.delta_theta_deg = deltas[static_cast<std::size_t>(i)];
    profile.confidence = 1.0;
    profile.embedding = tint_embedding(tints[static_cast<std::size_t>(i)]);
    truth.profiles.push_back(std::move(profile));

    const auto gate = make_gate(placed, i, n_samples, config.sample_rate);

    // Far-field arrival: a mic closer to the source direction hears the
    // signal earlier, delay_m = -(p_m . u)/c.
    const double ux = std::cos(doas[static_cast<std::size_t>(i)] *
                               std::numbers::pi / 180.0);
    const double uy = std::sin(doas[static_cast<std::size_t>(i)] *
                               std::numbers::pi / 180.0);
    std::vector<double> delay_samples(static_cast<std::size_t>(n_mics));
    for (int m = 0; m < n_mics; ++m) {
      const Vec2 p = geom.mic_positions[static_cast<std::size_t>(m)];
      delay_samples[static_cast<std::size_t>(m)] =
          -(p.x * ux + p.y * uy) / geom.sound_speed * config.sample_rate;
    }

    Rng source_rng(source_seeds[static_cast<std::size_t>(i)]);
    if (config.source == SourceKind::kNoise) {
      std::vector<float> white(n_samples);
      for (auto& v : white) v = static_cast<float>(source_rng.normal());
      const auto taps = design_tint_fir(tints[static_cast<std::size_t>(i)],
                                        config.sample_rate);
      std::vector<float> tinted;
      fir_filter(white, taps, tinted);
      const double rms = active_rms(tinted, std::vector<float>(n_samples, 1.0f));
      const float norm = rms > 1e-9 ? static_cast<float>(0.1 / rms) : 0.0f;
      for (std::size_t n = 0; n < n_samples; ++n) tinted[n] *= norm * gate[n];
      for (int m = 0; m < n_mics; ++m) {
        add_delayed(tinted, delay_samples[static_cast<std::size_t>(m)],
                    audio.channels[static_cast<std::size_t>(m)]);
      }
    } else {
      const ToneSet tones = draw_tones(tints[static_cast<std::size_t>(i)],
                                       config.sample_rate, source_rng);
      // Analytic delays: each mic sees the same gate but phase-shifted
      // carriers, exact for any fractional delay.
      const std::size_t n_tones = tones.freq_hz.size();
      std::vector<std::complex<double>> rot(n_tones), step(n_tones);
      std::vector<std::vector<std::complex<double>>> mic_offset(
          static_cast<std::size_t>(n_mics),
          std::vector<std::complex<double>>(n_tones));
      for (std::size_t k = 0; k < n_tones; ++k) {
        const double w = kTwoPi * tones.freq_hz[k] / config.sample_rate;
        rot[k] = std::polar(1.0, tones.phase[k]);
        step[k] = std::polar(1.0, w);
        for (int m = 0; m < n_mics; ++m) {
          mic_offset[static_cast<std::size_t>(m)][k] =
              std::polar(tones.amp[k] * 0.1,
                         -w * delay_samples[static_cast<std::size_t>(m)]);
        }
      }
      for (std::size_t n = 0; n < n_samples; ++n) {
        if (gate[n] > 0.0f) {
          for (int m = 0; m < n_mics; ++m) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n_tones; ++k) {
              acc += (rot[k] * mic_offset[static_cast<std::size_t>(m)][k]).imag();
            }
            audio.channels[static_cast<std::size_t>(m)][n] +=
                gate[n] * static_cast<float>(acc);
          }
        }
        for (std::size_t k = 0; k < n_tones; ++k) rot[k] *= step[k];
        if ((n & 0xfff) == 0xfff) {
          for (std::size_t k = 0; k < n_tones; ++k) rot[k] /= std::abs(rot[k]);
        }
      }
    }
  }

  if (config.snr_db.has_value()) {
    double power = 0.0;
    for (const auto& ch : audio.channels) {
      for (const float v : ch) power += static_cast<double>(v) * v;
    }
    power /= static_cast<double>(n_samples) * static_cast<double>(n_mics);
    const double sigma =
        std::sqrt(power * std::pow(10.0, -config.snr_db.value() / 10.0));
    Rng noise_rng(mix_seed(config.seed, 0xd1f5));
    for (auto& ch : audio.channels) {
      for (auto& v : ch) {
        v += static_cast<float>(sigma * noise_rng.normal());
      }
    }
  }

  // Keep headroom; uniform gain does not change annotations, ratios, or IPDs.
  float peak = 0.0f;
  for (const auto& ch : audio.channels) {
    for (const float v : ch) peak = std::max(peak, std::fabs(v));
  }
  if (peak > 0.9f) {
    const float scale = 0.9f / peak;
    for (auto& ch : audio.channels) {
      for (auto& v : ch) v *= scale;
    }
  }

  truth.audio = std::move(audio);
  return truth;
}

AudioChunk overlap_mix_augment(const AudioChunk& a, const AudioChunk& b,
                               double ssr_db) {
  require(a.audio.channel_count() == b.audio.channel_count(),
          ErrorCode::kInvalidArgument, "overlap_mix: channel counts differ");
  require(a.audio.frames() == b.audio.frames(), ErrorCode::kInvalidArgument,
          "overlap_mix: chunk lengths differ");
  require(a.audio.sample_rate == b.audio.sample_rate, ErrorCode::kInvalidArgument,
          "overlap_mix: sample rates differ");

  auto rms = [](const MultiChannelAudio& audio) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& ch : audio.channels) {
      for (const float v : ch) {
        sum += static_cast<double>(v) * v;
        ++count;
      }
    }
    return count > 0 ? std::sqrt(sum / static_cast<double>(count)) : 0.0;
  };

  const double rms_a = rms(a.audio);
  const double rms_b = rms(b.audio);
  require(rms_a > 0.0 && rms_b > 0.0, ErrorCode::kInvalidArgument,
          "overlap_mix: silent chunk, signal-to-signal ratio undefined");

  // Scale b so rms(a) / rms(scaled b) = 10^(ssr_db/20).
  const double scale = rms_a / (rms_b * std::pow(10.0, ssr_db / 20.0));

  AudioChunk out;
  out.audio.sample_rate = a.audio.sample_rate;
  out.audio.channels = a.audio.channels;
  for (int c = 0; c < a.audio.channel_count(); ++c) {
    auto& dst = out.audio.channels[static_cast<std::size_t>(c)];
    const auto& src = b.audio.channels[static_cast<std::size_t>(c)];
    for (std::size_t n = 0; n < dst.size(); ++n) {
      dst[n] += static_cast<float>(scale) * src[n];
    }
  }
  out.labels.session = a.labels.session;
  out.labels.segments = a.labels.segments;
  out.labels.segments.insert(out.labels.segments.end(), b.labels.segments.begin(),
                             b.labels.segments.end());
  out.labels = out.labels.normalized();
  return out;
}

}  // namespace arraydiar
