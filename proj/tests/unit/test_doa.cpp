// tests/unit/test_doa.cpp

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

#include <doctest.h>

#include <cmath>

#include "arraydiar/doa.hpp"
#include "arraydiar/error.hpp"
#include "arraydiar/rng.hpp"
#include "arraydiar/simulator.hpp"

using namespace arraydiar;

namespace {

SceneConfig basic_scene(std::uint64_t seed, std::vector<double> doas,
                        SourceKind source = SourceKind::kNoise) {
  SceneConfig cfg;
  cfg.n_speakers = static_cast<int>(doas.size());
  cfg.doas_deg = std::move(doas);
  cfg.target_overlap_ratio = 0.25;
  cfg.duration_s = 8.0;
  cfg.seed = seed;
  cfg.source = source;
  return cfg;
}

}  // namespace

TEST_CASE("pool_speaker_segments: overlap removal keeps solo speech only") {
  Annotation ann;
  ann.segments = {{"A", 0.0, 5.0}, {"B", 3.0, 5.0}};
  const auto solo = pool_speaker_segments(ann, "A", 0.0);
  REQUIRE(solo.size() == 1);
  CHECK(solo[0].begin == doctest::Approx(0.0));
  CHECK(solo[0].end == doctest::Approx(3.0));

  const auto solo_b = pool_speaker_segments(ann, "B", 0.0);
  REQUIRE(solo_b.size() == 1);
  CHECK(solo_b[0].begin == doctest::Approx(5.0));
  CHECK(solo_b[0].end == doctest::Approx(8.0));

  CHECK_THROWS_AS(pool_speaker_segments(ann, "nobody", 0.0), Error);
}

TEST_CASE("pool_speaker_segments: short pieces are filtered out") {
  Annotation ann;
  ann.segments = {{"A", 0.0, 0.3}, {"A", 2.0, 0.2}, {"B", 5.0, 1.0}};
  CHECK(pool_speaker_segments(ann, "A", 0.5).empty());
  CHECK(pool_speaker_segments(ann, "A", 0.25).size() == 1);
}

TEST_CASE("pool_speaker_segments: matches a sampled solo-time oracle") {
  Rng rng(61);
  for (int trial = 0; trial < 25; ++trial) {
    Annotation ann;
    const int n = rng.uniform_int(2, 4);
    for (int s = 0; s < n; ++s) {
      const std::string spk = "spk" + std::to_string(s + 1);
      double t = rng.uniform(0.0, 2.0);
      while (t < 8.0) {
        const double len = rng.uniform(0.3, 2.0);
        ann.segments.push_back({spk, t, std::min(len, 8.0 - t)});
        t += len + rng.uniform(0.1, 1.5);
      }
    }
    const auto solo = pool_speaker_segments(ann, "spk1", 0.0);

    const double step = 0.0005;
    double expected = 0.0;
    for (double t = step / 2; t < 9.0; t += step) {
      bool own = false, other = false;
      for (const Segment& seg : ann.segments) {
        if (t >= seg.onset && t < seg.offset()) {
          if (seg.speaker == "spk1") {
            own = true;
          } else {
            other = true;
          }
        }
      }
      if (own && !other) expected += step;
    }
    CHECK(total_length(solo) == doctest::Approx(expected).epsilon(5e-3));
  }
}

TEST_CASE("estimate_doa: recovers a simulated source within 2 degrees") {
  const auto geom = default_geometry();
  const auto scene = synthesize_scene(basic_scene(7, {60.0, 240.0}));
  const auto solo = pool_speaker_segments(scene.annotation, "spk1", 0.5);
  REQUIRE(!solo.empty());
  const auto est =
      estimate_doa(scene.audio, geom.geometry, geom.pairs, solo);
  CHECK(circular_distance_deg(est.theta_deg, 60.0) <= 2.0);
  CHECK(est.segment_seconds == doctest::Approx(total_length(solo)));
  CHECK(est.score > 0.5);
}

TEST_CASE("estimate_doa: two speakers at 0 and 180 are both recovered") {
  const auto geom = default_geometry();
  const auto scene = synthesize_scene(basic_scene(8, {0.0, 180.0}));
  for (int speaker = 0; speaker < 2; ++speaker) {
    const std::string id = "spk" + std::to_string(speaker + 1);
    const auto solo = pool_speaker_segments(scene.annotation, id, 0.5);
    REQUIRE(!solo.empty());
    const auto est = estimate_doa(scene.audio, geom.geometry, geom.pairs, solo);
    CHECK(circular_distance_deg(est.theta_deg, speaker == 0 ? 0.0 : 180.0) <= 2.0);
  }
}

TEST_CASE("estimate_doa: invariant to a global gain change") {
  const auto geom = default_geometry();
  const auto scene = synthesize_scene(basic_scene(9, {120.0, 310.0}));
  const auto solo = pool_speaker_segments(scene.annotation, "spk1", 0.5);
  const auto est1 = estimate_doa(scene.audio, geom.geometry, geom.pairs, solo);

  MultiChannelAudio scaled = scene.audio;
  for (auto& ch : scaled.channels) {
    for (auto& v : ch) v *= 0.31f;
  }
  const auto est2 = estimate_doa(scaled, geom.geometry, geom.pairs, solo);
  CHECK(est1.theta_deg == est2.theta_deg);
  CHECK(est1.score == doctest::Approx(est2.score).epsilon(1e-9));
}

TEST_CASE("estimate_doa: response at truth dominates every look 45+ degrees away") {
  const auto geom = default_geometry();
  const auto scene = synthesize_scene(basic_scene(10, {200.0, 20.0}));
  const auto solo = pool_speaker_segments(scene.annotation, "spk1", 0.5);
  DoaSearchConfig cfg;
  const auto spec = stft(scene.audio, cfg.stft);
  const auto response = steered_response(spec, geom.geometry, geom.pairs, solo, cfg);
  const std::size_t truth_idx = 200;
  for (std::size_t g = 0; g < response.size(); ++g) {
    if (circular_distance_deg(static_cast<double>(g), 200.0) >= 45.0) {
      CHECK(response[truth_idx] > response[g]);
    }
  }
}

TEST_CASE("estimate_doa: rotating the scene rotates the estimate") {
  const auto geom = default_geometry();
  const double shift = 37.0;
  const auto base = synthesize_scene(basic_scene(11, {80.0, 260.0}));
  const auto moved = synthesize_scene(basic_scene(11, {80.0 + shift, 260.0 + shift}));
  const auto solo_base = pool_speaker_segments(base.annotation, "spk1", 0.5);
  const auto solo_moved = pool_speaker_segments(moved.annotation, "spk1", 0.5);
  const auto est_base =
      estimate_doa(base.audio, geom.geometry, geom.pairs, solo_base);
  const auto est_moved =
      estimate_doa(moved.audio, geom.geometry, geom.pairs, solo_moved);
  CHECK(circular_distance_deg(est_moved.theta_deg, est_base.theta_deg + shift) <=
        3.0);
}

TEST_CASE("estimate_doa: identical channels give a deterministic low-confidence pick") {
  MultiChannelAudio audio;
  audio.sample_rate = 16000;
  Rng rng(62);
  std::vector<float> ch(16000);
  for (auto& v : ch) v = static_cast<float>(0.2 * rng.normal());
  audio.channels.assign(8, ch);
  const auto geom = default_geometry();
  const std::vector<Interval> all = {{0.0, 1.0}};

  const auto est1 = estimate_doa(audio, geom.geometry, geom.pairs, all);
  const auto est2 = estimate_doa(audio, geom.geometry, geom.pairs, all);
  CHECK(est1.theta_deg == est2.theta_deg);
  CHECK(est1.confidence == est2.confidence);

  // A genuine far-field source scores a much sharper peak.
  const auto scene = synthesize_scene(basic_scene(12, {45.0, 225.0}));
  const auto solo = pool_speaker_segments(scene.annotation, "spk1", 0.5);
  const auto real = estimate_doa(scene.audio, geom.geometry, geom.pairs, solo);
  CHECK(est1.confidence < 0.5 * real.confidence);
}

TEST_CASE("estimate_doa: argument validation") {
  const auto geom = default_geometry();
  MultiChannelAudio audio;
  audio.sample_rate = 16000;
  audio.channels.assign(8, std::vector<float>(8000, 0.01f));

  const std::vector<Interval> none;
  CHECK_THROWS_AS(estimate_doa(audio, geom.geometry, geom.pairs, none), Error);

  const std::vector<Interval> outside = {{100.0, 101.0}};
  CHECK_THROWS_AS(estimate_doa(audio, geom.geometry, geom.pairs, outside), Error);

  DoaSearchConfig bad;
  bad.grid_step_deg = 7.0;  // does not divide 360
  const std::vector<Interval> ok = {{0.0, 0.4}};
  CHECK_THROWS_AS(estimate_doa(audio, geom.geometry, geom.pairs, ok, bad), Error);
}
