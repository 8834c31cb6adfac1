// tests/unit/test_features.cpp

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
#include <filesystem>

#include "arraydiar/error.hpp"
#include "arraydiar/features.hpp"
#include "arraydiar/rng.hpp"
#include "arraydiar/simulator.hpp"

using namespace arraydiar;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo,
                     double hi) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

std::vector<double> unit_embedding(Rng& rng) {
  std::vector<double> e(static_cast<std::size_t>(kEmbeddingDim));
  double norm = 0.0;
  for (auto& v : e) {
    v = rng.normal();
    norm += v * v;
  }
  for (auto& v : e) v /= std::sqrt(norm);
  return e;
}

}  // namespace

TEST_CASE("band plan: mel edges are increasing and cover every band") {
  const BandPlan plan = BandPlan::mel(16, 125.0, 7600.0, 512, 16000);
  REQUIRE(plan.edges.size() == 17);
  for (std::size_t b = 1; b < plan.edges.size(); ++b) {
    CHECK(plan.edges[b] > plan.edges[b - 1]);
  }
  CHECK(plan.edges.back() <= 257);
}

TEST_CASE("pool_bands: per-band averages") {
  BandPlan plan;
  plan.n_bands = 2;
  plan.edges = {0, 2, 5};
  Matrix tf(1, 5);
  for (std::size_t f = 0; f < 5; ++f) tf(0, f) = static_cast<double>(f + 1);
  const Matrix pooled = pool_bands(tf, plan);
  CHECK(pooled(0, 0) == doctest::Approx(1.5));   // (1+2)/2
  CHECK(pooled(0, 1) == doctest::Approx(4.0));   // (3+4+5)/3
}

TEST_CASE("choose_virtual_doas: joint placement for reals at 0 and 90") {
  const std::vector<double> reals = {0.0, 90.0};
  const auto two = choose_virtual_doas(reals, 2);
  REQUIRE(two.size() == 2);
  CHECK(two[0] == doctest::Approx(180.0));
  CHECK(two[1] == doctest::Approx(270.0));

  const auto one = choose_virtual_doas(reals, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == doctest::Approx(225.0));

  CHECK(choose_virtual_doas(reals, 0).empty());
}

TEST_CASE("virtual_speaker_embedding: deterministic unit vectors") {
  const auto a = virtual_speaker_embedding(0);
  const auto b = virtual_speaker_embedding(0);
  const auto c = virtual_speaker_embedding(1);
  REQUIRE(a.size() == kEmbeddingDim);
  double norm = 0.0, diff = 0.0;
  for (int k = 0; k < kEmbeddingDim; ++k) {
    CHECK(a[k] == b[k]);
    norm += a[k] * a[k];
    diff += std::fabs(a[k] - c[k]);
  }
  CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(diff > 1e-3);
}

TEST_CASE("assemble_features: fills virtual slots and rejects overflow") {
  Rng rng(71);
  const std::size_t T = 12;
  const int B = 4;
  const Matrix lps_bands = random_matrix(T, B, rng, -10.0, 0.0);
  const std::vector<Matrix> af = {random_matrix(T, B, rng, -1.0, 1.0),
                                  random_matrix(T, B, rng, -1.0, 1.0)};
  const std::vector<double> thetas = {0.0, 90.0};
  const std::vector<double> deltas = {90.0, 90.0};
  const std::vector<std::vector<double>> embeddings = {unit_embedding(rng),
                                                       unit_embedding(rng)};
  const std::vector<std::string> names = {"alice", "bob"};

  int provider_calls = 0;
  const AfProvider provider = [&](double theta) {
    ++provider_calls;
    Matrix m(T, B, theta / 360.0);
    return m;
  };

  const FusedFeatures features = assemble_features(
      lps_bands, af, thetas, deltas, embeddings, names, 4, provider, 0.01, "s");
  REQUIRE(features.n_slots() == 4);
  CHECK(features.real_count() == 2);
  CHECK(provider_calls == 2);
  CHECK(features.slots[0].name == "alice");
  CHECK_FALSE(features.slots[0].is_virtual);
  CHECK(features.slots[2].is_virtual);
  CHECK(features.slots[2].theta_deg == doctest::Approx(180.0));
  CHECK(features.slots[3].theta_deg == doctest::Approx(270.0));
  // Virtual margins against {0, 90, 180, 270} are 90 degrees.
  CHECK(features.slots[2].delta_theta_deg == doctest::Approx(90.0));
  CHECK(features.slots[3].delta_theta_deg == doctest::Approx(90.0));
  // Real slots keep the caller's margins.
  CHECK(features.slots[0].delta_theta_deg == doctest::Approx(90.0));

  // Acoustic stream is normalized per band.
  for (int b = 0; b < B; ++b) {
    double mean = 0.0;
    for (std::size_t t = 0; t < T; ++t) mean += features.acoustic(t, b);
    CHECK(std::fabs(mean / static_cast<double>(T)) < 1e-9);
  }

  // Four real speakers: no provider involvement needed.
  const std::vector<Matrix> af4 = {af[0], af[1], af[0], af[1]};
  const std::vector<double> thetas4 = {0.0, 90.0, 180.0, 270.0};
  const std::vector<double> deltas4 = {90.0, 90.0, 90.0, 90.0};
  const std::vector<std::vector<double>> emb4 = {
      embeddings[0], embeddings[1], unit_embedding(rng), unit_embedding(rng)};
  const std::vector<std::string> names4 = {"a", "b", "c", "d"};
  const FusedFeatures full = assemble_features(
      lps_bands, af4, thetas4, deltas4, emb4, names4, 4, nullptr, 0.01);
  CHECK(full.real_count() == 4);

  // Five speakers exceed the slot capacity.
  std::vector<Matrix> af5 = af4;
  af5.push_back(af[0]);
  std::vector<double> thetas5 = thetas4;
  thetas5.push_back(45.0);
  std::vector<double> deltas5 = deltas4;
  deltas5.push_back(45.0);
  auto emb5 = emb4;
  emb5.push_back(unit_embedding(rng));
  std::vector<std::string> names5 = names4;
  names5.push_back("e");
  CHECK_THROWS_AS(assemble_features(lps_bands, af5, thetas5, deltas5, emb5,
                                    names5, 4, nullptr, 0.01),
                  Error);
}

TEST_CASE("feature files: save and load round trip exactly") {
  SceneConfig cfg;
  cfg.n_speakers = 2;
  cfg.doas_deg = {40.0, 220.0};
  cfg.duration_s = 3.0;
  cfg.seed = 5;
  const auto scene = synthesize_scene(cfg);
  const FusedFeatures features =
      extract_features(scene.audio, default_geometry(), scene.profiles,
                       FeatureExtractConfig{}, "sess1");
  REQUIRE(features.n_slots() == 4);
  CHECK(features.real_count() == 2);
  CHECK(features.frames() > 100);

  const auto dir = std::filesystem::temp_directory_path() / "arraydiar_tests";
  std::filesystem::create_directories(dir);
  const auto path = dir / "features.bin";
  save_features(features, path);
  const FusedFeatures back = load_features(path);
  CHECK(back.session == "sess1");
  CHECK(back.frames() == features.frames());
  CHECK(back.hop_seconds == doctest::Approx(features.hop_seconds));
  REQUIRE(back.n_slots() == features.n_slots());
  for (int i = 0; i < back.n_slots(); ++i) {
    const auto& a = features.slots[static_cast<std::size_t>(i)];
    const auto& b = back.slots[static_cast<std::size_t>(i)];
    CHECK(a.name == b.name);
    CHECK(a.is_virtual == b.is_virtual);
    CHECK(a.theta_deg == b.theta_deg);
    for (std::size_t k = 0; k < a.af.size(); ++k) {
      REQUIRE(a.af.data()[k] == b.af.data()[k]);
    }
    for (int k = 0; k < kEmbeddingDim; ++k) {
      CHECK(a.embedding[static_cast<std::size_t>(k)] ==
            b.embedding[static_cast<std::size_t>(k)]);
    }
  }
  for (std::size_t k = 0; k < features.acoustic.size(); ++k) {
    REQUIRE(features.acoustic.data()[k] == back.acoustic.data()[k]);
  }
}

TEST_CASE("extract_features: profiles without embeddings are rejected") {
  SceneConfig cfg;
  cfg.n_speakers = 2;
  cfg.duration_s = 2.0;
  cfg.seed = 6;
  auto scene = synthesize_scene(cfg);
  scene.profiles[0].embedding.clear();
  CHECK_THROWS_AS(extract_features(scene.audio, default_geometry(),
                                   scene.profiles, FeatureExtractConfig{}),
                  Error);
}
