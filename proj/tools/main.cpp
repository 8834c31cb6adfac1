// tools/main.cpp

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

// Batch driver wiring the library into a diarization pipeline:
//   simulate -> estimate-doa -> extract -> train -> infer -> score / fuse

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <set>
#include <thread>

#include <CLI11.hpp>

#include "arraydiar/annotations.hpp"
#include "arraydiar/audio.hpp"
#include "arraydiar/config.hpp"
#include "arraydiar/doa.hpp"
#include "arraydiar/error.hpp"
#include "arraydiar/features.hpp"
#include "arraydiar/fusion.hpp"
#include "arraydiar/io.hpp"
#include "arraydiar/model.hpp"
#include "arraydiar/profile.hpp"
#include "arraydiar/rng.hpp"
#include "arraydiar/scoring.hpp"
#include "arraydiar/simulator.hpp"
#include "arraydiar/spatial.hpp"

namespace ad = arraydiar;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct CommonFlags {
  std::string config_path;
  std::string geometry_path;
  int jobs = 1;
};

ad::PipelineConfig effective_config(const CommonFlags& flags) {
  std::string path = flags.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv(ad::kConfigEnvVar)) path = env;
  }
  if (path.empty()) return ad::PipelineConfig{};
  return ad::load_config(path);
}

ad::GeometrySpec effective_geometry(const CommonFlags& flags,
                                    const ad::PipelineConfig& config) {
  if (!flags.geometry_path.empty()) return ad::load_geometry(flags.geometry_path);
  return config.geometry();
}

std::string scene_name(const std::string& prefix, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_%04d", index);
  return prefix + buf;
}

int cmd_simulate(const CommonFlags& flags, const std::string& scene_config_path,
                 std::uint64_t seed, bool seed_given, int count,
                 const std::string& out_dir, const std::string& prefix) {
  const ad::PipelineConfig config = effective_config(flags);
  const ad::GeometrySpec geometry = effective_geometry(flags, config);
  ad::SceneConfig scene_cfg = ad::load_scene_config(scene_config_path);
  if (seed_given) scene_cfg.seed = seed;

  std::filesystem::create_directories(out_dir);

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      if (failed.load()) return;
      try {
        ad::SceneConfig cfg = scene_cfg;
        cfg.seed = ad::mix_seed(scene_cfg.seed, static_cast<std::uint64_t>(i));
        const std::string name = scene_name(prefix, i);
        ad::SceneTruth truth = ad::synthesize_scene(cfg, geometry.geometry);
        truth.annotation.session = name;
        const auto base = std::filesystem::path(out_dir) / name;
        ad::write_wav(truth.audio, base.string() + ".wav");
        ad::rttm_write({&truth.annotation, 1}, base.string() + ".rttm");
        ad::write_profiles(truth.profiles, base.string() + ".prof");
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) first_error = e.what();
      }
    }
  };

  const int n_threads = std::max(1, std::min(flags.jobs, count));
  std::vector<std::thread> threads;
  for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  if (failed.load()) {
    throw ad::Error(ad::ErrorCode::kInvalidArgument, first_error);
  }
  std::cout << "wrote " << count << " scene(s) to " << out_dir << "\n";
  return kExitOk;
}

int cmd_estimate_doa(const CommonFlags& flags, const std::string& wav_path,
                     const std::string& rttm_path, const std::string& profiles_in,
                     const std::string& out_path) {
  const ad::PipelineConfig config = effective_config(flags);
  const ad::GeometrySpec geometry = effective_geometry(flags, config);
  const ad::MultiChannelAudio audio = ad::read_wav(wav_path);
  const auto annotations = ad::rttm_read(rttm_path);
  ad::require(!annotations.empty(), ad::ErrorCode::kMalformedFile,
              rttm_path + ": no sessions");
  const ad::Annotation& annotation = annotations.front();

  std::map<std::string, ad::SpeakerProfile> given;
  if (!profiles_in.empty()) {
    for (const auto& p : ad::read_profiles(profiles_in)) given[p.id] = p;
  }

  const ad::DoaSearchConfig doa_cfg = config.doa_config();
  std::vector<ad::SpeakerProfile> profiles;
  std::vector<double> thetas;
  const auto speakers = annotation.speakers();
  for (const std::string& speaker : speakers) {
    const auto segments =
        ad::pool_speaker_segments(annotation, speaker, doa_cfg.min_duration);
    const ad::DoaEstimate est =
        ad::estimate_doa(audio, geometry.geometry, geometry.pairs, segments, doa_cfg);
    ad::SpeakerProfile profile;
    profile.id = speaker;
    profile.theta_deg = est.theta_deg;
    profile.confidence = est.confidence;
    if (auto it = given.find(speaker); it != given.end()) {
      profile.embedding = it->second.embedding;
    }
    profiles.push_back(std::move(profile));
    thetas.push_back(est.theta_deg);
  }
  const auto deltas = ad::min_angular_difference(thetas);
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    profiles[i].delta_theta_deg = deltas[i];
    std::printf("%s theta %.1f delta %.1f conf %.3f close %d\n",
                profiles[i].id.c_str(), profiles[i].theta_deg,
                profiles[i].delta_theta_deg, profiles[i].confidence,
                profiles[i].close_pair() ? 1 : 0);
  }
  ad::write_profiles(profiles, out_path);
  return kExitOk;
}

int cmd_extract(const CommonFlags& flags, const std::string& wav_path,
                const std::string& profiles_path, const std::string& out_path,
                std::string session) {
  const ad::PipelineConfig config = effective_config(flags);
  const ad::GeometrySpec geometry = effective_geometry(flags, config);
  const ad::MultiChannelAudio audio = ad::read_wav(wav_path);
  const auto profiles = ad::read_profiles(profiles_path);
  if (session.empty()) {
    session = std::filesystem::path(wav_path).stem().string();
  }
  const ad::FusedFeatures features = ad::extract_features(
      audio, geometry, profiles, config.feature_config(), session);
  ad::save_features(features, out_path);
  std::cout << "wrote " << features.frames() << " frames x "
            << features.n_slots() << " slots to " << out_path << "\n";
  return kExitOk;
}

ad::SceneTruth load_scene_dir_entry(const std::filesystem::path& wav_path) {
  ad::SceneTruth scene;
  scene.audio = ad::read_wav(wav_path);
  const std::string stem = wav_path.stem().string();
  const auto rttm_path = wav_path.parent_path() / (stem + ".rttm");
  const auto prof_path = wav_path.parent_path() / (stem + ".prof");
  const auto annotations = ad::rttm_read(rttm_path);
  ad::require(!annotations.empty(), ad::ErrorCode::kMalformedFile,
              rttm_path.string() + ": no sessions");
  scene.annotation = annotations.front();
  scene.annotation.session = stem;
  scene.profiles = ad::read_profiles(prof_path);
  return scene;
}

int cmd_train(const CommonFlags& flags, const std::string& scenes_dir,
              const std::string& out_path, std::uint64_t seed, bool no_augment) {
  const ad::PipelineConfig config = effective_config(flags);
  const ad::GeometrySpec geometry = effective_geometry(flags, config);

  std::vector<std::filesystem::path> wavs;
  for (const auto& entry : std::filesystem::directory_iterator(scenes_dir)) {
    if (entry.path().extension() == ".wav") wavs.push_back(entry.path());
  }
  std::sort(wavs.begin(), wavs.end());
  ad::require(!wavs.empty(), ad::ErrorCode::kMissingFile,
              scenes_dir + ": no .wav scenes");

  std::vector<ad::SceneTruth> scenes;
  for (const auto& wav : wavs) scenes.push_back(load_scene_dir_entry(wav));

  ad::TrainConfig train_cfg = config.train_config();
  train_cfg.seed = seed;
  train_cfg.af_augment = !no_augment;

  const ad::TrainResult result =
      ad::train(scenes, train_cfg, config.feature_config(), geometry);
  ad::save_checkpoint(result.params, out_path);
  std::printf("initial loss %.6f\n", result.initial_loss);
  for (std::size_t e = 0; e < result.train_loss.size(); ++e) {
    std::printf("epoch %zu train %.6f val %.6f\n", e, result.train_loss[e],
                result.val_loss[e]);
  }
  std::printf("best epoch %d val %.6f checkpoint %s checksum %016llx\n",
              result.best_epoch, result.best_val_loss, out_path.c_str(),
              static_cast<unsigned long long>(result.params.checksum()));
  return kExitOk;
}

int cmd_infer(const CommonFlags& flags, const std::string& model_path,
              const std::string& features_path, const std::string& out_path,
              double threshold_flag, bool threshold_given) {
  const ad::PipelineConfig config = effective_config(flags);
  const ad::ModelParams params = ad::load_checkpoint(model_path);
  const ad::FusedFeatures features = ad::load_features(features_path);
  const double threshold = threshold_given ? threshold_flag : config.threshold;

  const ad::Matrix binary = ad::infer(params, features, threshold);

  // Virtual filler slots never reach the output annotation.
  std::vector<std::size_t> real_cols;
  std::vector<std::string> names;
  for (int i = 0; i < features.n_slots(); ++i) {
    if (!features.slots[static_cast<std::size_t>(i)].is_virtual) {
      real_cols.push_back(static_cast<std::size_t>(i));
      names.push_back(features.slots[static_cast<std::size_t>(i)].name);
    }
  }
  ad::Matrix real_binary(binary.rows(), real_cols.size());
  for (std::size_t t = 0; t < binary.rows(); ++t) {
    for (std::size_t c = 0; c < real_cols.size(); ++c) {
      real_binary(t, c) = binary(t, real_cols[c]);
    }
  }
  ad::Annotation hyp = ad::frames_to_segments(real_binary, features.hop_seconds,
                                              names, features.session);
  hyp = ad::postprocess(hyp, config.min_on, config.max_gap);
  ad::rttm_write({&hyp, 1}, out_path);
  std::cout << "wrote " << hyp.segments.size() << " segments to " << out_path
            << "\n";
  return kExitOk;
}

int cmd_score(const CommonFlags& flags, const std::string& ref_path,
              const std::string& hyp_path, double collar_flag, bool collar_given) {
  const ad::PipelineConfig config = effective_config(flags);
  const double collar = collar_given ? collar_flag : config.collar;
  const auto refs = ad::rttm_read(ref_path);
  const auto hyps = ad::rttm_read(hyp_path);
  const ad::SessionScores scores = ad::score_sessions(refs, hyps, collar);
  std::cout << ad::format_report(scores);
  return kExitOk;
}

int cmd_fuse(const CommonFlags& flags, const std::vector<std::string>& hyp_paths,
             const std::string& out_path, const std::string& weights_csv,
             int anchor, const std::string& exclude_path) {
  (void)flags;
  ad::require(!hyp_paths.empty(), ad::ErrorCode::kInvalidArgument,
              "fuse: no hypothesis files");
  ad::require(anchor >= 0 && anchor < static_cast<int>(hyp_paths.size()),
              ad::ErrorCode::kInvalidArgument, "fuse: anchor index out of range");

  std::vector<double> weights;
  if (!weights_csv.empty()) {
    weights = ad::parse_double_list(weights_csv, "fuse: weights");
    ad::require(weights.size() == hyp_paths.size(), ad::ErrorCode::kInvalidArgument,
                "fuse: weight count does not match hypothesis count");
  } else {
    weights.assign(hyp_paths.size(), 1.0);
  }

  // Optional per-session exclusion: lines "<session> <hyp-index-1-based>".
  std::set<std::pair<std::string, std::size_t>> excluded;
  if (!exclude_path.empty()) {
    const ad::KeyValueFile file = ad::KeyValueFile::parse_file(exclude_path);
    for (const auto& line : file.lines()) {
      const auto index = static_cast<std::size_t>(file.parse_double(line)) - 1;
      excluded.insert(std::make_pair(line.key, index));
    }
  }

  std::vector<std::vector<ad::Annotation>> all;
  for (const auto& path : hyp_paths) all.push_back(ad::rttm_read(path));

  // Anchor file first, remaining files in order.
  std::vector<std::size_t> order;
  order.push_back(static_cast<std::size_t>(anchor));
  for (std::size_t h = 0; h < hyp_paths.size(); ++h) {
    if (h != static_cast<std::size_t>(anchor)) order.push_back(h);
  }

  std::vector<ad::Annotation> fused;
  for (const ad::Annotation& anchor_ann : all[order.front()]) {
    std::vector<ad::Annotation> inputs;
    std::vector<double> input_weights;
    for (const std::size_t h : order) {
      if (excluded.count({anchor_ann.session, h})) continue;
      for (const ad::Annotation& candidate : all[h]) {
        if (candidate.session == anchor_ann.session &&
            !candidate.segments.empty()) {
          inputs.push_back(candidate);
          input_weights.push_back(weights[h]);
          break;
        }
      }
    }
    ad::require(!inputs.empty(), ad::ErrorCode::kInvalidArgument,
                "fuse: every hypothesis is excluded for session " +
                    anchor_ann.session);
    fused.push_back(ad::fuse(inputs, input_weights));
  }
  ad::rttm_write(fused, out_path);
  std::cout << "fused " << fused.size() << " session(s) into " << out_path << "\n";
  return kExitOk;
}

int cmd_print_config(const CommonFlags& flags) {
  std::cout << ad::dump_config(effective_config(flags));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-channel spatial features and overlap-aware speaker "
               "diarization toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;
  app.add_option("--config", flags.config_path,
                 "Pipeline config file (default: $" + std::string(ad::kConfigEnvVar) +
                     ")");
  app.add_option("--geometry", flags.geometry_path,
                 "Array geometry file (default: circular 8-mic array)");
  app.add_option("--jobs", flags.jobs, "Worker threads for per-file work")
      ->check(CLI::PositiveNumber);
  app.fallthrough();

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate", "Synthesize far-field scenes (WAV + RTTM + profiles)");
  std::string scene_config, out_dir = ".", prefix = "scene";
  std::uint64_t seed = 0;
  int count = 1;
  simulate->add_option("--scene", scene_config, "Scene config file")->required();
  auto* seed_opt = simulate->add_option("--seed", seed, "Override the scene seed");
  simulate->add_option("--count", count, "Number of scenes")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--out-dir", out_dir, "Output directory");
  simulate->add_option("--prefix", prefix, "Scene name prefix");

  // estimate-doa
  auto* estimate = app.add_subcommand(
      "estimate-doa", "Estimate per-speaker directions from annotations");
  std::string wav_path, rttm_path, profiles_in, est_out;
  estimate->add_option("--wav", wav_path, "Multi-channel WAV")->required();
  estimate->add_option("--rttm", rttm_path, "Diarization annotation")->required();
  estimate->add_option("--profiles-in", profiles_in,
                       "Copy embeddings from this profile file");
  estimate->add_option("--out", est_out, "Output profile file")->required();

  // extract
  auto* extract = app.add_subcommand(
      "extract", "Dump fused LPS/AF features for enrolled speakers");
  std::string ex_wav, ex_profiles, ex_out, ex_session;
  extract->add_option("--wav", ex_wav, "Multi-channel WAV")->required();
  extract->add_option("--profiles", ex_profiles, "Speaker profile file")
      ->required();
  extract->add_option("--out", ex_out, "Output feature file")->required();
  extract->add_option("--session", ex_session, "Session id (default: WAV stem)");

  // train
  auto* train_cmd = app.add_subcommand(
      "train", "Train the activity model on simulated scenes");
  std::string scenes_dir, ckpt_out;
  std::uint64_t train_seed = 0;
  bool no_augment = false;
  train_cmd->add_option("--scenes", scenes_dir, "Scene directory (wav+rttm+prof)")
      ->required();
  train_cmd->add_option("--out", ckpt_out, "Output checkpoint")->required();
  train_cmd->add_option("--seed", train_seed, "Training seed");
  train_cmd->add_flag("--no-augment", no_augment,
                      "Disable close-speaker AF augmentation");

  // infer
  auto* infer_cmd = app.add_subcommand(
      "infer", "Run the model on extracted features and write RTTM");
  std::string model_path, feat_path, infer_out;
  double threshold = 0.5;
  infer_cmd->add_option("--model", model_path, "Model checkpoint")->required();
  infer_cmd->add_option("--features", feat_path, "Feature file")->required();
  infer_cmd->add_option("--out", infer_out, "Output RTTM")->required();
  auto* thr_opt =
      infer_cmd->add_option("--threshold", threshold, "Activity threshold");

  // score
  auto* score = app.add_subcommand("score", "Score hypothesis RTTM against a reference");
  std::string ref_path, hyp_path;
  double collar = 0.25;
  score->add_option("--ref", ref_path, "Reference RTTM")->required();
  score->add_option("--hyp", hyp_path, "Hypothesis RTTM")->required();
  auto* collar_opt = score->add_option("--collar", collar, "Scoring collar, seconds");

  // fuse
  auto* fuse_cmd =
      app.add_subcommand("fuse", "Fuse hypothesis RTTMs by overlap-aware voting");
  std::vector<std::string> fuse_inputs;
  std::string fuse_out, fuse_weights, fuse_exclude;
  int fuse_anchor = 0;
  fuse_cmd->add_option("hypotheses", fuse_inputs, "Hypothesis RTTM files")
      ->required();
  fuse_cmd->add_option("--out", fuse_out, "Output RTTM")->required();
  fuse_cmd->add_option("--weights", fuse_weights, "Comma-separated weights");
  fuse_cmd->add_option("--anchor", fuse_anchor,
                       "Index of the label-space anchor hypothesis");
  fuse_cmd->add_option("--exclude", fuse_exclude,
                       "File of '<session> <hyp-index>' pairs to drop");

  // print-config
  app.add_subcommand("print-config", "Echo the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) {
      return cmd_simulate(flags, scene_config, seed, seed_opt->count() > 0, count,
                          out_dir, prefix);
    }
    if (estimate->parsed()) {
      return cmd_estimate_doa(flags, wav_path, rttm_path, profiles_in, est_out);
    }
    if (extract->parsed()) {
      return cmd_extract(flags, ex_wav, ex_profiles, ex_out, ex_session);
    }
    if (train_cmd->parsed()) {
      return cmd_train(flags, scenes_dir, ckpt_out, train_seed, no_augment);
    }
    if (infer_cmd->parsed()) {
      return cmd_infer(flags, model_path, feat_path, infer_out, threshold,
                       thr_opt->count() > 0);
    }
    if (score->parsed()) {
      return cmd_score(flags, ref_path, hyp_path, collar, collar_opt->count() > 0);
    }
    if (fuse_cmd->parsed()) {
      return cmd_fuse(flags, fuse_inputs, fuse_out, fuse_weights, fuse_anchor,
                      fuse_exclude);
    }
    if (app.get_subcommand("print-config")->parsed()) {
      return cmd_print_config(flags);
    }
  } catch (const ad::Error& e) {
    std::cerr << "error (" << ad::error_code_name(e.code()) << "): " << e.what()
              << "\n";
    return e.code() == ad::ErrorCode::kNumericFailure ? kExitNumeric : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
