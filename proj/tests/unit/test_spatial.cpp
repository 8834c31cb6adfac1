// tests/unit/test_spatial.cpp

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
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "arraydiar/audio.hpp"
#include "arraydiar/error.hpp"
#include "arraydiar/rng.hpp"
#include "arraydiar/spatial.hpp"
#include "oracles.hpp"

using namespace arraydiar;

namespace {

constexpr double kPi = std::numbers::pi;

ArrayGeometry two_mic_geometry() {
  ArrayGeometry geom;
  geom.mic_positions = {{0.0425, 0.0}, {-0.0425, 0.0}};
  return geom;
}

/// Exact far-field multi-tone plane wave: every mic sees the same tones with
/// an analytic time advance along the source direction.
MultiChannelAudio plane_wave(const ArrayGeometry& geom, double theta_deg,
                             const std::vector<double>& freqs_hz, int rate,
                             std::size_t frames, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> phases;
  for (std::size_t k = 0; k < freqs_hz.size(); ++k) {
    phases.push_back(rng.uniform(0.0, 2.0 * kPi));
  }
  const double ux = std::cos(theta_deg * kPi / 180.0);
  const double uy = std::sin(theta_deg * kPi / 180.0);
  MultiChannelAudio audio;
  audio.sample_rate = rate;
  audio.channels.assign(geom.mic_positions.size(), std::vector<float>(frames));
  for (std::size_t m = 0; m < geom.mic_positions.size(); ++m) {
    const Vec2 p = geom.mic_positions[m];
    const double advance = (p.x * ux + p.y * uy) / geom.sound_speed;
    for (std::size_t n = 0; n < frames; ++n) {
      double v = 0.0;
      const double t = static_cast<double>(n) / rate + advance;
      for (std::size_t k = 0; k < freqs_hz.size(); ++k) {
        v += 0.1 * std::sin(2.0 * kPi * freqs_hz[k] * t + phases[k]);
      }
      audio.channels[m][n] = static_cast<float>(v);
    }
  }
  return audio;
}

double mean_band_af(const AngleFeature& af, const ChannelSpectrogram& spec,
                    const std::vector<std::size_t>& bins) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 2; t + 2 < spec.frame_count; ++t) {
    for (const std::size_t f : bins) {
      sum += af.values(t, f);
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

}  // namespace

TEST_CASE("pair_baseline: distance and m1->m2 axis") {
  const auto geom = two_mic_geometry();
  const auto base = pair_baseline(geom, {0, 1});
  CHECK(base.delta_m == doctest::Approx(0.085).epsilon(1e-12));
  CHECK(base.axis_deg == doctest::Approx(180.0).epsilon(1e-12));

  ArrayGeometry bad = geom;
  bad.mic_positions[1] = bad.mic_positions[0];
  CHECK_THROWS_AS(pair_baseline(bad, {0, 1}), Error);
  CHECK_THROWS_AS(pair_baseline(geom, {0, 5}), Error);
}

TEST_CASE("pair_baseline: diametric pair of the default circle spans the diameter") {
  const auto spec = default_geometry();
  for (const MicPair pair : spec.pairs) {
    const auto base = pair_baseline(spec.geometry, pair);
    CHECK(base.delta_m == doctest::Approx(2.0 * 0.0425).epsilon(1e-12));
  }
}

TEST_CASE("steering_phase: perpendicular and dc cases vanish") {
  const auto geom = two_mic_geometry();
  CHECK(steering_phase(geom, {0, 1}, 90.0, 2000.0) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(steering_phase(geom, {0, 1}, 270.0, 2000.0) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(steering_phase(geom, {0, 1}, 33.0, 0.0) == 0.0);
}

TEST_CASE("steering_phase: hand-evaluated value at theta_rel 0") {
  // 2*pi*1000*0.085/343 along the m2->m1 direction (+x here).
  const auto geom = two_mic_geometry();
  const double expected = 2.0 * kPi * 1000.0 * 0.085 / 343.0;
  CHECK(expected == doctest::Approx(1.557).epsilon(1e-3));
  CHECK(steering_phase(geom, {0, 1}, 0.0, 1000.0) ==
        doctest::Approx(1.5570575834).epsilon(1e-9));
}

TEST_CASE("ipd: identical channels give zero everywhere") {
  MultiChannelAudio audio;
  audio.sample_rate = 16000;
  Rng rng(5);
  std::vector<float> ch(2000);
  for (auto& v : ch) v = static_cast<float>(0.2 * rng.normal());
  audio.channels = {ch, ch};
  const auto spec = stft(audio, StftConfig{});
  const Matrix phase = ipd(spec, {0, 1});
  for (std::size_t i = 0; i < phase.size(); ++i) {
    CHECK(std::fabs(phase.data()[i]) < 1e-12);
  }
}

TEST_CASE("ipd: swapping the pair negates the phase difference") {
  MultiChannelAudio audio;
  audio.sample_rate = 16000;
  Rng rng(6);
  audio.channels.assign(2, std::vector<float>(2000));
  for (auto& chan : audio.channels) {
    for (auto& v : chan) v = static_cast<float>(0.2 * rng.normal());
  }
  const auto spec = stft(audio, StftConfig{});
  const Matrix forward_ipd = ipd(spec, {0, 1});
  const Matrix reverse_ipd = ipd(spec, {1, 0});
  for (std::size_t i = 0; i < forward_ipd.size(); ++i) {
    CHECK(std::fabs(wrap_pi(forward_ipd.data()[i] + reverse_ipd.data()[i])) < 1e-9);
  }
  CHECK_THROWS_AS(ipd(spec, {0, 4}), Error);
}

TEST_CASE("ipd: an integer delay shows up as 2*pi*f*tau at the tone bin") {
  const double freq = 1000.0;  // bin 32 at 16 kHz / 512
  const int delay = 3;
  MultiChannelAudio audio;
  audio.sample_rate = 16000;
  audio.channels.assign(2, std::vector<float>(4000, 0.0f));
  for (std::size_t n = 0; n < 4000; ++n) {
    audio.channels[0][n] =
        static_cast<float>(0.5 * std::sin(2.0 * kPi * freq * n / 16000.0));
  }
  for (std::size_t n = delay; n < 4000; ++n) {
    audio.channels[1][n] = audio.channels[0][n - delay];
  }
  const auto spec = stft(audio, StftConfig{});
  const double expected = 2.0 * kPi * freq * delay / 16000.0;
  const Matrix phase = ipd(spec, {0, 1});
  for (std::size_t t = 2; t + 2 < spec.frame_count; ++t) {
    CHECK(std::fabs(wrap_pi(phase(t, 32) - expected)) < 1e-6);
  }
}

TEST_CASE("angle_feature: peaks near 1 at the true direction and beats far looks") {
  const auto spec_geom = default_geometry();
  const std::vector<double> freqs = {625.0, 1000.0, 1625.0, 2250.0, 3125.0};
  std::vector<std::size_t> bins;
  for (const double f : freqs) {
    bins.push_back(static_cast<std::size_t>(std::llround(f * 512.0 / 16000.0)));
  }
  const double true_theta = 57.0;
  const auto audio = plane_wave(spec_geom.geometry, true_theta, freqs, 16000,
                                8000, 17);
  const auto spec = stft(audio, StftConfig{});

  const auto af_true = angle_feature(spec, spec_geom.geometry, spec_geom.pairs,
                                     true_theta);
  const double at_truth = mean_band_af(af_true, spec, bins);
  CHECK(at_truth > 0.9);

  for (double look = 0.0; look < 360.0; look += 5.0) {
    if (circular_distance_deg(look, true_theta) < 45.0) continue;
    const auto af_look =
        angle_feature(spec, spec_geom.geometry, spec_geom.pairs, look);
    CHECK(at_truth > mean_band_af(af_look, spec, bins));
  }
}

TEST_CASE("angle_feature: dc bin with identical channels is exactly 1") {
  MultiChannelAudio audio;
  audio.sample_rate = 16000;
  Rng rng(9);
  std::vector<float> ch(1200);
  for (auto& v : ch) v = static_cast<float>(0.2 * rng.normal());
  audio.channels.assign(8, ch);
  const auto spec = stft(audio, StftConfig{});
  const auto geom = default_geometry();
  const auto af = angle_feature(spec, geom.geometry, geom.pairs, 123.0);
  for (std::size_t t = 0; t < spec.frame_count; ++t) {
    CHECK(af.values(t, 0) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(
      angle_feature(spec, geom.geometry, std::span<const MicPair>{}, 0.0), Error);
}

TEST_CASE("angle_feature: matches the direct cos(steering - ipd) formula") {
  const auto geom = default_geometry();
  MultiChannelAudio audio;
  audio.sample_rate = 16000;
  Rng rng(10);
  audio.channels.assign(8, std::vector<float>(2000));
  for (auto& chan : audio.channels) {
    for (auto& v : chan) v = static_cast<float>(0.2 * rng.normal());
  }
  const auto spec = stft(audio, StftConfig{});
  const double theta = 211.0;
  const auto af = angle_feature(spec, geom.geometry, geom.pairs, theta);

  Matrix direct(spec.frame_count, spec.bin_count, 0.0);
  for (const MicPair pair : geom.pairs) {
    const Matrix phase = ipd(spec, pair);
    for (std::size_t t = 0; t < spec.frame_count; ++t) {
      for (std::size_t f = 0; f < spec.bin_count; ++f) {
        direct(t, f) += std::cos(
            steering_phase(geom.geometry, pair, theta, spec.bin_hz(f)) -
            phase(t, f));
      }
    }
  }
  for (std::size_t i = 0; i < direct.size(); ++i) {
    direct.data()[i] /= static_cast<double>(geom.pairs.size());
    CHECK(std::fabs(direct.data()[i] - af.values.data()[i]) < 1e-12);
  }
}

TEST_CASE("angle_feature: normalized values stay in [-1, 1] and ignore global phase") {
  const auto geom = default_geometry();
  MultiChannelAudio audio;
  audio.sample_rate = 16000;
  Rng rng(11);
  audio.channels.assign(8, std::vector<float>(1600));
  for (auto& chan : audio.channels) {
    for (auto& v : chan) v = static_cast<float>(0.2 * rng.normal());
  }
  auto spec = stft(audio, StftConfig{});
  const auto af = angle_feature(spec, geom.geometry, geom.pairs, 300.0);
  for (std::size_t i = 0; i < af.values.size(); ++i) {
    CHECK(af.values.data()[i] >= -1.0 - 1e-12);
    CHECK(af.values.data()[i] <= 1.0 + 1e-12);
  }

  const std::complex<double> rotation = std::polar(1.0, 1.234);
  for (auto& channel : spec.values) {
    for (auto& v : channel) v *= rotation;
  }
  const auto rotated = angle_feature(spec, geom.geometry, geom.pairs, 300.0);
  for (std::size_t i = 0; i < af.values.size(); ++i) {
    CHECK(std::fabs(rotated.values.data()[i] - af.values.data()[i]) < 1e-9);
  }

  const auto raw = angle_feature(spec, geom.geometry, geom.pairs, 300.0, false);
  CHECK_FALSE(raw.normalized);
  for (std::size_t i = 0; i < raw.values.size(); ++i) {
    CHECK(std::fabs(raw.values.data()[i] - 4.0 * rotated.values.data()[i]) < 1e-9);
  }
}

TEST_CASE("augment_af: documented point cases") {
  Matrix a(1, 1), b(1, 1);

  SUBCASE("gamma 1 with equal features is the identity") {
    a(0, 0) = 0.37;
    b(0, 0) = 0.37;
    const auto out = augment_af(a, b, 20.0, 80.0, 1.0, 0.0);
    CHECK(out.af_i(0, 0) == 0.37);
    CHECK(out.af_j(0, 0) == 0.37);
  }
  SUBCASE("max semantics") {
    a(0, 0) = 0.2;
    b(0, 0) = 0.9;
    const auto out = augment_af(a, b, 0.0, 0.0, 1.0, 0.0);
    CHECK(out.af_i(0, 0) == 0.9);
    CHECK(out.af_j(0, 0) == 0.9);
  }
  SUBCASE("midpoint of 100 and 140 is 120") {
    const auto out = augment_af(a, b, 100.0, 140.0, 0.9, 0.0);
    CHECK(out.theta_shared_deg == doctest::Approx(120.0).epsilon(1e-12));
  }
  SUBCASE("midpoint wraps across 0") {
    const auto out = augment_af(a, b, 350.0, 10.0, 0.9, 0.0);
    CHECK(out.theta_shared_deg == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("perturbation shifts the shared direction") {
    const auto out = augment_af(a, b, 100.0, 140.0, 0.9, 30.0);
    CHECK(out.theta_shared_deg == doctest::Approx(150.0).epsilon(1e-12));
  }
  SUBCASE("shape mismatch and bad gamma are rejected") {
    Matrix c(2, 1);
    CHECK_THROWS_AS(augment_af(a, c, 0.0, 0.0, 1.0, 0.0), Error);
    CHECK_THROWS_AS(augment_af(a, b, 0.0, 0.0, 1.5, 0.0), Error);
  }
}

TEST_CASE("augment_af: dominance, gamma monotonicity, symmetry at gamma 1") {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    Matrix a(3, 4), b(3, 4), a_pos(3, 4), b_pos(3, 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a.data()[i] = rng.uniform(-1.0, 1.0);
      b.data()[i] = rng.uniform(-1.0, 1.0);
      a_pos.data()[i] = rng.uniform(0.0, 1.0);
      b_pos.data()[i] = rng.uniform(0.0, 1.0);
    }
    const double g1 = rng.uniform(0.0, 1.0);
    const double g2 = rng.uniform(g1, 1.0);

    // Dominance holds for any sign.
    const auto any_sign = augment_af(a, b, 10.0, 30.0, g1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(any_sign.af_i.data()[i] >= a.data()[i]);
      CHECK(any_sign.af_j.data()[i] >= b.data()[i]);
    }

    // Monotone in gamma for nonnegative features.
    const auto low = augment_af(a_pos, b_pos, 10.0, 30.0, g1, 0.0);
    const auto high = augment_af(a_pos, b_pos, 10.0, 30.0, g2, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(high.af_i.data()[i] >= low.af_i.data()[i]);
      CHECK(high.af_j.data()[i] >= low.af_j.data()[i]);
    }

    // Both sides coincide at gamma = 1.
    const auto sym = augment_af(a, b, 10.0, 30.0, 1.0, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(sym.af_i.data()[i] == sym.af_j.data()[i]);
    }
  }
}

TEST_CASE("min_angular_difference: documented cases and brute-force parity") {
  {
    const std::vector<double> thetas = {0.0, 90.0, 180.0, 270.0};
    for (const double d : min_angular_difference(thetas)) {
      CHECK(d == doctest::Approx(90.0));
    }
  }
  {
    const std::vector<double> thetas = {350.0, 10.0};
    for (const double d : min_angular_difference(thetas)) {
      CHECK(d == doctest::Approx(20.0));
    }
  }
  {
    const std::vector<double> thetas = {10.0, 50.0, 300.0};
    const auto deltas = min_angular_difference(thetas);
    CHECK(deltas[0] == doctest::Approx(40.0));
    CHECK(deltas[1] == doctest::Approx(40.0));
    CHECK(deltas[2] == doctest::Approx(70.0));
  }
  {
    const std::vector<double> lone = {123.0};
    CHECK(min_angular_difference(lone)[0] == 180.0);
  }
  CHECK_THROWS_AS(min_angular_difference(std::span<const double>{}), Error);

  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> thetas;
    const int n = rng.uniform_int(2, 6);
    for (int i = 0; i < n; ++i) thetas.push_back(rng.uniform(0.0, 360.0));
    const auto got = min_angular_difference(thetas);
    const auto want = arraydiar::testing::brute_force_min_angular_difference(thetas);
    for (int i = 0; i < n; ++i) {
      CHECK(got[static_cast<std::size_t>(i)] ==
            doctest::Approx(want[static_cast<std::size_t>(i)]).epsilon(1e-12));
    }
  }
}

TEST_CASE("geometry file: round trip and validation") {
  const auto dir = std::filesystem::temp_directory_path() / "arraydiar_tests";
  std::filesystem::create_directories(dir);
  const auto path = dir / "geom.txt";
  const auto spec = default_geometry();
  save_geometry(spec, path);
  const auto back = load_geometry(path);
  REQUIRE(back.geometry.mic_count() == 8);
  REQUIRE(back.pairs.size() == 4);
  for (int m = 0; m < 8; ++m) {
    CHECK(back.geometry.mic_positions[m].x ==
          doctest::Approx(spec.geometry.mic_positions[m].x).epsilon(1e-6));
  }
  CHECK(back.pairs[1].m1 == 1);
  CHECK(back.pairs[1].m2 == 5);

  const auto bad = dir / "bad_geom.txt";
  {
    std::ofstream out(bad);
    out << "mic 0 0\nmic 0 0\npair 1 2\n";
  }
  CHECK_THROWS_AS(load_geometry(bad), Error);
}
