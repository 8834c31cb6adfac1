// core/src/features.cpp

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

#include "arraydiar/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "arraydiar/error.hpp"
#include "arraydiar/io.hpp"
#include "arraydiar/rng.hpp"

namespace arraydiar {

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

BandPlan BandPlan::mel(int n_bands, double lo_hz, double hi_hz, int fft_size,
                       int sample_rate) {
  require(n_bands >= 1, ErrorCode::kInvalidArgument, "bands: need at least one");
  require(lo_hz >= 0.0 && hi_hz > lo_hz, ErrorCode::kInvalidArgument,
          "bands: need 0 <= lo < hi");
  const std::size_t n_bins = static_cast<std::size_t>(fft_size) / 2 + 1;
  BandPlan plan;
  plan.n_bands = n_bands;
  const double mel_lo = hz_to_mel(lo_hz);
  const double mel_hi = hz_to_mel(hi_hz);
  plan.edges.resize(static_cast<std::size_t>(n_bands) + 1);
  for (int b = 0; b <= n_bands; ++b) {
    const double mel = mel_lo + (mel_hi - mel_lo) * b / n_bands;
    const double hz = mel_to_hz(mel);
    const double bin = hz * fft_size / sample_rate;
    plan.edges[static_cast<std::size_t>(b)] = static_cast<std::size_t>(
        std::clamp<double>(std::round(bin), 0.0, static_cast<double>(n_bins)));
  }
  // Every band keeps at least one bin.
  for (int b = 1; b <= n_bands; ++b) {
    auto& edge = plan.edges[static_cast<std::size_t>(b)];
    edge = std::max(edge, plan.edges[static_cast<std::size_t>(b - 1)] + 1);
    edge = std::min(edge, n_bins);
  }
  for (int b = n_bands; b >= 1; --b) {
    auto& lo = plan.edges[static_cast<std::size_t>(b - 1)];
    lo = std::min(lo, plan.edges[static_cast<std::size_t>(b)] - 1);
  }
  return plan;
}

Matrix pool_bands(const Matrix& tf, const BandPlan& plan) {
  require(plan.edges.size() == static_cast<std::size_t>(plan.n_bands) + 1,
          ErrorCode::kInvalidArgument, "bands: plan has no edges");
  require(plan.edges.back() <= tf.cols(), ErrorCode::kInvalidArgument,
          "bands: plan exceeds the bin count");
  Matrix out(tf.rows(), static_cast<std::size_t>(plan.n_bands));
  for (std::size_t t = 0; t < tf.rows(); ++t) {
    for (int b = 0; b < plan.n_bands; ++b) {
      const std::size_t lo = plan.edges[static_cast<std::size_t>(b)];
      const std::size_t hi = plan.edges[static_cast<std::size_t>(b) + 1];
      double sum = 0.0;
      for (std::size_t f = lo; f < hi; ++f) sum += tf(t, f);
      out(t, static_cast<std::size_t>(b)) = sum / static_cast<double>(hi - lo);
    }
  }
  return out;
}

int FusedFeatures::real_count() const {
  int count = 0;
  for (const SlotFeatures& slot : slots) {
    if (!slot.is_virtual) ++count;
  }
  return count;
}

std::vector<double> choose_virtual_doas(std::span<const double> real_thetas_deg,
                                        int count, double grid_step_deg) {
  require(count >= 0, ErrorCode::kInvalidArgument, "virtual doas: negative count");
  if (count == 0) return {};
  require(grid_step_deg > 0.0, ErrorCode::kInvalidArgument,
          "virtual doas: grid step must be positive");

  // Joint search for up to two fillers; three or more use a coarser grid to
  // keep the search exact but bounded.
  const double step = count <= 2 ? grid_step_deg : std::max(grid_step_deg, 3.0);
  const std::size_t n_grid = static_cast<std::size_t>(std::llround(360.0 / step));

  auto objective = [&](std::span<const double> virtuals) {
    double worst = 360.0;
    for (std::size_t v = 0; v < virtuals.size(); ++v) {
      for (const double real : real_thetas_deg) {
        worst = std::min(worst, circular_distance_deg(virtuals[v], real));
      }
      for (std::size_t u = 0; u < virtuals.size(); ++u) {
        if (u == v) continue;
        worst = std::min(worst, circular_distance_deg(virtuals[v], virtuals[u]));
      }
    }
    return worst;
  };

  std::vector<double> best;
  double best_value = -1.0;
  std::vector<double> candidate(static_cast<std::size_t>(count), 0.0);

  std::function<void(int)> search = [&](int depth) {
    if (depth == count) {
      const double value = objective(candidate);
      if (value > best_value) {
        best_value = value;
        best = candidate;
      }
      return;
    }
    for (std::size_t g = 0; g < n_grid; ++g) {
      candidate[static_cast<std::size_t>(depth)] = static_cast<double>(g) * step;
      search(depth + 1);
    }
  };
  search(0);
  return best;
}

std::vector<double> virtual_speaker_embedding(int index) {
  // The pool's seed stream is tagged so it can never collide with scene
  // speaker seeds.
  Rng rng(mix_seed(0x56495254554c5354ULL, static_cast<std::uint64_t>(index)));
  std::vector<double> emb(static_cast<std::size_t>(kEmbeddingDim));
  double norm = 0.0;
  for (auto& v : emb) {
    v = rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(std::max(norm, 1e-12));
  for (auto& v : emb) v /= norm;
  return emb;
}

FusedFeatures assemble_features(const Matrix& lps_bands,
                                const std::vector<Matrix>& af,
                                std::span<const double> thetas_deg,
                                std::span<const double> delta_thetas_deg,
                                const std::vector<std::vector<double>>& embeddings,
                                std::span<const std::string> names, int n_slots,
                                const AfProvider& af_provider,
                                double hop_seconds, const std::string& session) {
  const std::size_t n_real = af.size();
  require(thetas_deg.size() == n_real && delta_thetas_deg.size() == n_real &&
              embeddings.size() == n_real && names.size() == n_real,
          ErrorCode::kInvalidArgument,
          "assemble_features: per-speaker inputs are misaligned");
  require(n_slots >= 1, ErrorCode::kInvalidArgument,
          "assemble_features: need at least one slot");
  require(static_cast<int>(n_real) <= n_slots, ErrorCode::kInvalidArgument,
          "assemble_features: " + std::to_string(n_real) + " speakers exceed " +
              std::to_string(n_slots) + " slots");

  FusedFeatures features;
  features.session = session;
  features.hop_seconds = hop_seconds;
  features.n_bands = static_cast<int>(lps_bands.cols());

  // Per-band mean/variance normalization of the acoustic stream.
  features.acoustic = lps_bands;
  for (std::size_t b = 0; b < features.acoustic.cols(); ++b) {
    double mean = 0.0;
    for (std::size_t t = 0; t < features.acoustic.rows(); ++t) {
      mean += features.acoustic(t, b);
    }
    mean /= std::max<std::size_t>(features.acoustic.rows(), 1);
    double var = 0.0;
    for (std::size_t t = 0; t < features.acoustic.rows(); ++t) {
      const double d = features.acoustic(t, b) - mean;
      var += d * d;
    }
    var /= std::max<std::size_t>(features.acoustic.rows(), 1);
    const double scale = 1.0 / std::max(std::sqrt(var), 1e-3);
    for (std::size_t t = 0; t < features.acoustic.rows(); ++t) {
      features.acoustic(t, b) = (features.acoustic(t, b) - mean) * scale;
    }
  }

  for (std::size_t i = 0; i < n_real; ++i) {
    require(af[i].same_shape(lps_bands), ErrorCode::kInvalidArgument,
            "assemble_features: AF shape differs from the acoustic shape");
    require(embeddings[i].size() == static_cast<std::size_t>(kEmbeddingDim),
            ErrorCode::kInvalidArgument,
            "assemble_features: embedding for '" + std::string(names[i]) +
                "' must have " + std::to_string(kEmbeddingDim) + " values");
    SlotFeatures slot;
    slot.name = names[i];
    slot.theta_deg = wrap_degrees(thetas_deg[i]);
    slot.delta_theta_deg = delta_thetas_deg[i];
    slot.is_virtual = false;
    slot.af = af[i];
    slot.embedding = embeddings[i];
    features.slots.push_back(std::move(slot));
  }

  const int n_virtual = n_slots - static_cast<int>(n_real);
  if (n_virtual > 0) {
    require(static_cast<bool>(af_provider), ErrorCode::kInvalidArgument,
            "assemble_features: virtual slots need an AF provider");
    const auto virtual_doas = choose_virtual_doas(thetas_deg, n_virtual);
    std::vector<double> all_thetas(thetas_deg.begin(), thetas_deg.end());
    all_thetas.insert(all_thetas.end(), virtual_doas.begin(), virtual_doas.end());
    const auto all_deltas = min_angular_difference(all_thetas);
    for (int v = 0; v < n_virtual; ++v) {
      SlotFeatures slot;
      slot.name = "virt" + std::to_string(v + 1);
      slot.theta_deg = virtual_doas[static_cast<std::size_t>(v)];
      slot.delta_theta_deg = all_deltas[n_real + static_cast<std::size_t>(v)];
      slot.is_virtual = true;
      slot.af = af_provider(slot.theta_deg);
      require(slot.af.same_shape(lps_bands), ErrorCode::kInvalidArgument,
              "assemble_features: AF provider returned a mismatched shape");
      slot.embedding = virtual_speaker_embedding(v);
      features.slots.push_back(std::move(slot));
    }
  }
  return features;
}

FusedFeatures extract_features(const MultiChannelAudio& audio,
                               const GeometrySpec& geometry,
                               const std::vector<SpeakerProfile>& profiles,
                               const FeatureExtractConfig& cfg,
                               const std::string& session) {
  require(!profiles.empty(), ErrorCode::kInvalidArgument,
          "extract_features: no speaker profiles");
  const ChannelSpectrogram spec = stft(audio, cfg.stft);
  const BandPlan plan = BandPlan::mel(cfg.n_bands, cfg.band_lo_hz, cfg.band_hi_hz,
                                      cfg.stft.fft_size, audio.sample_rate);
  const Matrix lps_bands = pool_bands(lps(spec, cfg.lps_channel), plan);

  std::vector<Matrix> af;
  std::vector<double> thetas, deltas;
  std::vector<std::vector<double>> embeddings;
  std::vector<std::string> names;
  for (const SpeakerProfile& profile : profiles) {
    require(!profile.embedding.empty(), ErrorCode::kInvalidArgument,
            "extract_features: profile '" + profile.id + "' has no embedding");
    af.push_back(pool_bands(
        angle_feature(spec, geometry.geometry, geometry.pairs, profile.theta_deg)
            .values,
        plan));
    thetas.push_back(profile.theta_deg);
    deltas.push_back(profile.delta_theta_deg);
    embeddings.push_back(profile.embedding);
    names.push_back(profile.id);
  }

  const AfProvider provider = [&](double theta_deg) {
    return pool_bands(
        angle_feature(spec, geometry.geometry, geometry.pairs, theta_deg).values,
        plan);
  };
  return assemble_features(lps_bands, af, thetas, deltas, embeddings, names,
                           cfg.n_slots, provider, spec.hop_seconds(), session);
}

void save_features(const FusedFeatures& features,
                   const std::filesystem::path& path) {
  AtomicFileWriter writer(path, /*binary=*/true);
  auto& out = writer.stream();
  out << "ADFEAT 1\n";
  out << "session " << features.session << "\n";
  out << "hop_seconds " << features.hop_seconds << "\n";
  out << "frames " << features.frames() << "\n";
  out << "bands " << features.n_bands << "\n";
  out << "emb_dim " << kEmbeddingDim << "\n";
  out << "slots " << features.n_slots() << "\n";
  for (const SlotFeatures& slot : features.slots) {
    out << "slot " << slot.name << " theta " << slot.theta_deg << " delta "
        << slot.delta_theta_deg << " virtual " << (slot.is_virtual ? 1 : 0)
        << "\n";
  }
  out << "data\n";
  write_raw_doubles(out, features.acoustic.data(), features.acoustic.size());
  for (const SlotFeatures& slot : features.slots) {
    write_raw_doubles(out, slot.af.data(), slot.af.size());
    write_raw_doubles(out, slot.embedding.data(), slot.embedding.size());
  }
  writer.commit();
}

FusedFeatures load_features(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    raise(ErrorCode::kMissingFile, "no such file: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::kMissingFile, "cannot open: " + path.string());

  std::string line;
  auto next_line = [&]() {
    if (!std::getline(in, line)) {
      raise(ErrorCode::kMalformedFile, path.string() + ": truncated header");
    }
    return line;
  };

  if (next_line() != "ADFEAT 1") {
    raise(ErrorCode::kUnsupportedFormat,
          path.string() + ": not an ADFEAT 1 feature file");
  }

  FusedFeatures features;
  std::size_t frames = 0;
  int emb_dim = 0;
  int n_slots = 0;
  while (next_line() != "data") {
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key == "session") {
      fields >> features.session;
    } else if (key == "hop_seconds") {
      fields >> features.hop_seconds;
    } else if (key == "frames") {
      fields >> frames;
    } else if (key == "bands") {
      fields >> features.n_bands;
    } else if (key == "emb_dim") {
      fields >> emb_dim;
    } else if (key == "slots") {
      fields >> n_slots;
    } else if (key == "slot") {
      SlotFeatures slot;
      std::string tag;
      fields >> slot.name;
      int virt = 0;
      while (fields >> tag) {
        if (tag == "theta") {
          fields >> slot.theta_deg;
        } else if (tag == "delta") {
          fields >> slot.delta_theta_deg;
        } else if (tag == "virtual") {
          fields >> virt;
        }
      }
      slot.is_virtual = virt != 0;
      features.slots.push_back(std::move(slot));
    } else {
      raise(ErrorCode::kMalformedFile,
            path.string() + ": unknown header field '" + key + "'");
    }
    if (fields.fail() && !fields.eof()) {
      raise(ErrorCode::kMalformedFile, path.string() + ": bad header line");
    }
  }
  if (emb_dim != kEmbeddingDim) {
    raise(ErrorCode::kUnsupportedFormat,
          path.string() + ": embedding dimension " + std::to_string(emb_dim) +
              " unsupported");
  }
  if (static_cast<int>(features.slots.size()) != n_slots) {
    raise(ErrorCode::kMalformedFile, path.string() + ": slot count mismatch");
  }

  features.acoustic =
      Matrix(frames, static_cast<std::size_t>(features.n_bands));
  read_raw_doubles(in, features.acoustic.data(), features.acoustic.size(),
                   path.string());
  for (SlotFeatures& slot : features.slots) {
    slot.af = Matrix(frames, static_cast<std::size_t>(features.n_bands));
    read_raw_doubles(in, slot.af.data(), slot.af.size(), path.string());
    slot.embedding.resize(static_cast<std::size_t>(kEmbeddingDim));
    read_raw_doubles(in, slot.embedding.data(), slot.embedding.size(),
                     path.string());
  }
  return features;
}

}  // namespace arraydiar
