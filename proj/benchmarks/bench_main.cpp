// benchmarks/bench_main.cpp

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

#include <benchmark/benchmark.h>

#include "arraydiar/audio.hpp"
#include "arraydiar/doa.hpp"
#include "arraydiar/features.hpp"
#include "arraydiar/model.hpp"
#include "arraydiar/rng.hpp"
#include "arraydiar/scoring.hpp"
#include "arraydiar/simulator.hpp"
#include "arraydiar/spatial.hpp"

namespace {

using namespace arraydiar;

SceneTruth bench_scene() {
  SceneConfig cfg;
  cfg.n_speakers = 3;
  cfg.duration_s = 4.0;
  cfg.target_overlap_ratio = 0.35;
  cfg.snr_db = 25.0;
  cfg.seed = 1;
  return synthesize_scene(cfg);
}

void BM_SynthesizeScene(benchmark::State& state) {
  SceneConfig cfg;
  cfg.n_speakers = 3;
  cfg.duration_s = 4.0;
  cfg.target_overlap_ratio = 0.35;
  cfg.snr_db = 25.0;
  for (auto _ : state) {
    cfg.seed++;
    benchmark::DoNotOptimize(synthesize_scene(cfg));
  }
}
BENCHMARK(BM_SynthesizeScene)->Unit(benchmark::kMillisecond);

void BM_Stft8Channel(benchmark::State& state) {
  const SceneTruth scene = bench_scene();
  for (auto _ : state) {
    benchmark::DoNotOptimize(stft(scene.audio, StftConfig{}));
  }
}
BENCHMARK(BM_Stft8Channel)->Unit(benchmark::kMillisecond);

void BM_AngleFeature(benchmark::State& state) {
  const SceneTruth scene = bench_scene();
  const auto geom = default_geometry();
  const auto spec = stft(scene.audio, StftConfig{});
  double theta = 0.0;
  for (auto _ : state) {
    theta += 11.0;
    benchmark::DoNotOptimize(
        angle_feature(spec, geom.geometry, geom.pairs, theta));
  }
}
BENCHMARK(BM_AngleFeature)->Unit(benchmark::kMillisecond);

void BM_SteeredResponseGrid(benchmark::State& state) {
  const SceneTruth scene = bench_scene();
  const auto geom = default_geometry();
  const auto spec = stft(scene.audio, StftConfig{});
  const auto solo = pool_speaker_segments(scene.annotation, "spk1", 0.5);
  const DoaSearchConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        steered_response(spec, geom.geometry, geom.pairs, solo, cfg));
  }
}
BENCHMARK(BM_SteeredResponseGrid)->Unit(benchmark::kMillisecond);

void BM_ExtractFeatures(benchmark::State& state) {
  const SceneTruth scene = bench_scene();
  const auto geom = default_geometry();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        extract_features(scene.audio, geom, scene.profiles, FeatureExtractConfig{}));
  }
}
BENCHMARK(BM_ExtractFeatures)->Unit(benchmark::kMillisecond);

void BM_ForwardPass(benchmark::State& state) {
  const SceneTruth scene = bench_scene();
  const auto geom = default_geometry();
  const FusedFeatures features =
      extract_features(scene.audio, geom, scene.profiles, FeatureExtractConfig{});
  ModelConfig cfg;
  cfg.input_dim = features.input_dim();
  const ModelParams params = ModelParams::init(cfg, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(params, features));
  }
}
BENCHMARK(BM_ForwardPass)->Unit(benchmark::kMillisecond);

void BM_DerScoring(benchmark::State& state) {
  Rng rng(9);
  std::vector<Annotation> refs, hyps;
  for (int i = 0; i < 8; ++i) {
    Annotation ref, hyp;
    for (int s = 0; s < 3; ++s) {
      const std::string spk = "spk" + std::to_string(s);
      double t = rng.uniform(0.0, 2.0);
      while (t < 60.0) {
        const double len = rng.uniform(0.5, 4.0);
        ref.segments.push_back({spk, t, len});
        hyp.segments.push_back({spk, t + rng.uniform(-0.2, 0.2), len});
        t += len + rng.uniform(0.2, 3.0);
      }
    }
    refs.push_back(ref);
    hyps.push_back(hyp);
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(der(refs[i % 8], hyps[i % 8], 0.25));
    ++i;
  }
}
BENCHMARK(BM_DerScoring)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
