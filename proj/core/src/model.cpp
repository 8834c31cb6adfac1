// core/src/model.cpp

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

#include "arraydiar/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "arraydiar/annotations.hpp"
#include "arraydiar/error.hpp"
#include "arraydiar/io.hpp"
#include "arraydiar/rng.hpp"

namespace arraydiar {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double clamp_prob(double p) {
  return std::clamp(p, kBceClamp, 1.0 - kBceClamp);
}

double bce(double p, double y) {
  const double pc = clamp_prob(p);
  return -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
}

// d bce(clamp(p), y) / dp; zero where the clamp is active.
double bce_grad(double p, double y) {
  if (p < kBceClamp || p > 1.0 - kBceClamp) return 0.0;
  return (p - y) / (p * (1.0 - p));
}

/// Writes the slot input vector [acoustic | af | delta/180 | embedding].
void fill_input(const FusedFeatures& features, std::size_t t, int slot,
                double* dst) {
  const int bands = features.n_bands;
  const SlotFeatures& s = features.slots[static_cast<std::size_t>(slot)];
  std::memcpy(dst, features.acoustic.row(t),
              static_cast<std::size_t>(bands) * sizeof(double));
  std::memcpy(dst + bands, s.af.row(t),
              static_cast<std::size_t>(bands) * sizeof(double));
  dst[2 * bands] = std::clamp(s.delta_theta_deg, 0.0, 180.0) / 180.0;
  std::memcpy(dst + 2 * bands + 1, s.embedding.data(),
              s.embedding.size() * sizeof(double));
}

struct ForwardState {
  std::vector<double> hidden;  // T * N * H, tanh outputs
  std::vector<double> concat;  // T * N * E, tanh outputs (combiner input)
  Matrix logits;               // T x N
  Matrix probs;                // T x N
};

void run_forward(const ModelParams& params, const FusedFeatures& features,
                 ForwardState& state) {
  const ModelConfig& cfg = params.cfg;
  require(features.n_slots() == cfg.n_slots, ErrorCode::kInvalidArgument,
          "forward: feature slots do not match the model");
  require(features.input_dim() == cfg.input_dim, ErrorCode::kInvalidArgument,
          "forward: feature dimension " + std::to_string(features.input_dim()) +
              " does not match the model input " + std::to_string(cfg.input_dim));

  const std::size_t T = features.frames();
  const int N = cfg.n_slots;
  const int H = cfg.hidden;
  const int E = cfg.slot_embed;
  const int D = cfg.input_dim;

  state.hidden.assign(T * static_cast<std::size_t>(N * H), 0.0);
  state.concat.assign(T * static_cast<std::size_t>(N * E), 0.0);
  state.logits = Matrix(T, static_cast<std::size_t>(N));
  state.probs = Matrix(T, static_cast<std::size_t>(N));

  std::vector<double> input(static_cast<std::size_t>(D));
  for (std::size_t t = 0; t < T; ++t) {
    for (int i = 0; i < N; ++i) {
      fill_input(features, t, i, input.data());
      double* h = state.hidden.data() + (t * static_cast<std::size_t>(N) + i) * H;
      for (int r = 0; r < H; ++r) {
        const double* w = params.w1.row(static_cast<std::size_t>(r));
        double acc = params.b1[static_cast<std::size_t>(r)];
        for (int c = 0; c < D; ++c) acc += w[c] * input[static_cast<std::size_t>(c)];
        h[r] = std::tanh(acc);
      }
      double* e = state.concat.data() + (t * static_cast<std::size_t>(N) + i) * E;
      for (int r = 0; r < E; ++r) {
        const double* w = params.w2.row(static_cast<std::size_t>(r));
        double acc = params.b2[static_cast<std::size_t>(r)];
        for (int c = 0; c < H; ++c) acc += w[c] * h[c];
        e[r] = std::tanh(acc);
      }
    }
  }

  const int k = cfg.context;
  const int Z = cfg.concat_dim();
  for (std::size_t t = 0; t < T; ++t) {
    for (int i = 0; i < N; ++i) {
      double acc = params.combiner_bias[static_cast<std::size_t>(i)];
      for (int j = -k; j <= k; ++j) {
        const std::ptrdiff_t tj = static_cast<std::ptrdiff_t>(t) + j;
        if (tj < 0 || tj >= static_cast<std::ptrdiff_t>(T)) continue;
        const Matrix& c_j = params.combiner[static_cast<std::size_t>(j + k)];
        const double* w = c_j.row(static_cast<std::size_t>(i));
        const double* z = state.concat.data() + static_cast<std::size_t>(tj) * Z;
        for (int c = 0; c < Z; ++c) acc += w[c] * z[c];
      }
      state.logits(t, static_cast<std::size_t>(i)) = acc;
      state.probs(t, static_cast<std::size_t>(i)) = sigmoid(acc);
    }
  }
}

// Indices of the maximum and second maximum; ties go to the lowest index.
std::pair<std::size_t, std::size_t> max_and_second(std::span<const double> v) {
  std::size_t arg_max = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[arg_max]) arg_max = i;
  }
  std::size_t arg_second = v.size();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i == arg_max) continue;
    if (arg_second == v.size() || v[i] > v[arg_second]) arg_second = i;
  }
  return {arg_max, arg_second};
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& cfg, std::uint64_t seed,
                              InitKind kind) {
  require(cfg.input_dim > 0 && cfg.hidden > 0 && cfg.slot_embed > 0 &&
              cfg.n_slots > 0 && cfg.context >= 0,
          ErrorCode::kInvalidArgument, "model: bad configuration");
  ModelParams params;
  params.cfg = cfg;
  Rng rng(mix_seed(seed, 0x0de1));

  auto uniform_matrix = [&](std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-s, s);
    return m;
  };

  params.w1 = uniform_matrix(static_cast<std::size_t>(cfg.hidden),
                             static_cast<std::size_t>(cfg.input_dim));
  params.b1.assign(static_cast<std::size_t>(cfg.hidden), 0.0);
  params.w2 = uniform_matrix(static_cast<std::size_t>(cfg.slot_embed),
                             static_cast<std::size_t>(cfg.hidden));
  params.b2.assign(static_cast<std::size_t>(cfg.slot_embed), 0.0);

  const int width = cfg.context_width();
  const std::size_t Z = static_cast<std::size_t>(cfg.concat_dim());
  params.combiner_bias.assign(static_cast<std::size_t>(cfg.n_slots), 0.0);
  params.combiner.clear();
  for (int j = 0; j < width; ++j) {
    if (kind == InitKind::kRandom) {
      Matrix c(static_cast<std::size_t>(cfg.n_slots), Z);
      const double s = std::sqrt(6.0 / static_cast<double>(Z * width + cfg.n_slots));
      for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] = rng.uniform(-s, s);
      params.combiner.push_back(std::move(c));
    } else {
      // Slot-symmetric start: each slot applies weights A to its own block
      // and B to every other block, so slot permutation commutes with the
      // combiner.
      const double s =
          std::sqrt(6.0 / static_cast<double>(Z * width + cfg.n_slots));
      std::vector<double> self_w(static_cast<std::size_t>(cfg.slot_embed));
      std::vector<double> cross_w(static_cast<std::size_t>(cfg.slot_embed));
      for (auto& v : self_w) v = rng.uniform(-s, s);
      for (auto& v : cross_w) v = rng.uniform(-s, s);
      Matrix c(static_cast<std::size_t>(cfg.n_slots), Z);
      for (int i = 0; i < cfg.n_slots; ++i) {
        for (int m = 0; m < cfg.n_slots; ++m) {
          for (int r = 0; r < cfg.slot_embed; ++r) {
            c(static_cast<std::size_t>(i),
              static_cast<std::size_t>(m * cfg.slot_embed + r)) =
                (m == i) ? self_w[static_cast<std::size_t>(r)]
                         : cross_w[static_cast<std::size_t>(r)];
          }
        }
      }
      params.combiner.push_back(std::move(c));
    }
  }
  return params;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t count = w1.size() + b1.size() + w2.size() + b2.size();
  for (const Matrix& c : combiner) count += c.size();
  return count + combiner_bias.size();
}

void ModelParams::flatten(std::vector<double>& out) const {
  out.clear();
  out.reserve(parameter_count());
  out.insert(out.end(), w1.data(), w1.data() + w1.size());
  out.insert(out.end(), b1.begin(), b1.end());
  out.insert(out.end(), w2.data(), w2.data() + w2.size());
  out.insert(out.end(), b2.begin(), b2.end());
  for (const Matrix& c : combiner) {
    out.insert(out.end(), c.data(), c.data() + c.size());
  }
  out.insert(out.end(), combiner_bias.begin(), combiner_bias.end());
}

void ModelParams::unflatten(std::span<const double> in) {
  require(in.size() == parameter_count(), ErrorCode::kInvalidArgument,
          "unflatten: size mismatch");
  const double* p = in.data();
  auto take = [&p](double* dst, std::size_t n) {
    std::memcpy(dst, p, n * sizeof(double));
    p += n;
  };
  take(w1.data(), w1.size());
  take(b1.data(), b1.size());
  take(w2.data(), w2.size());
  take(b2.data(), b2.size());
  for (Matrix& c : combiner) take(c.data(), c.size());
  take(combiner_bias.data(), combiner_bias.size());
}

std::uint64_t ModelParams::checksum() const {
  std::vector<double> flat;
  flatten(flat);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const double v : flat) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

ModelGradients::ModelGradients(const ModelConfig& cfg)
    : w1(static_cast<std::size_t>(cfg.hidden),
         static_cast<std::size_t>(cfg.input_dim)),
      b1(static_cast<std::size_t>(cfg.hidden), 0.0),
      w2(static_cast<std::size_t>(cfg.slot_embed),
         static_cast<std::size_t>(cfg.hidden)),
      b2(static_cast<std::size_t>(cfg.slot_embed), 0.0),
      combiner_bias(static_cast<std::size_t>(cfg.n_slots), 0.0) {
  for (int j = 0; j < cfg.context_width(); ++j) {
    combiner.emplace_back(static_cast<std::size_t>(cfg.n_slots),
                          static_cast<std::size_t>(cfg.concat_dim()));
  }
}

void ModelGradients::zero() {
  w1.fill(0.0);
  b1.assign(b1.size(), 0.0);
  w2.fill(0.0);
  b2.assign(b2.size(), 0.0);
  for (Matrix& c : combiner) c.fill(0.0);
  combiner_bias.assign(combiner_bias.size(), 0.0);
}

void ModelGradients::flatten(std::vector<double>& out) const {
  out.clear();
  out.insert(out.end(), w1.data(), w1.data() + w1.size());
  out.insert(out.end(), b1.begin(), b1.end());
  out.insert(out.end(), w2.data(), w2.data() + w2.size());
  out.insert(out.end(), b2.begin(), b2.end());
  for (const Matrix& c : combiner) {
    out.insert(out.end(), c.data(), c.data() + c.size());
  }
  out.insert(out.end(), combiner_bias.begin(), combiner_bias.end());
}

Matrix forward(const ModelParams& params, const FusedFeatures& features) {
  ForwardState state;
  run_forward(params, features, state);
  return state.probs;
}

VadOsd vad_osd(std::span<const double> slot_probs) {
  require(!slot_probs.empty(), ErrorCode::kInvalidArgument,
          "vad_osd: empty frame");
  const auto [arg_max, arg_second] = max_and_second(slot_probs);
  VadOsd out;
  out.vad = slot_probs[arg_max];
  out.osd = arg_second < slot_probs.size() ? slot_probs[arg_second] : 0.0;
  return out;
}

ActivityTargets ActivityTargets::from_matrix(Matrix per_speaker) {
  ActivityTargets targets;
  targets.vad.assign(per_speaker.rows(), 0.0);
  targets.osd.assign(per_speaker.rows(), 0.0);
  for (std::size_t t = 0; t < per_speaker.rows(); ++t) {
    int active = 0;
    for (std::size_t i = 0; i < per_speaker.cols(); ++i) {
      if (per_speaker(t, i) != 0.0) ++active;
    }
    targets.vad[t] = active >= 1 ? 1.0 : 0.0;
    targets.osd[t] = active >= 2 ? 1.0 : 0.0;
  }
  targets.per_speaker = std::move(per_speaker);
  return targets;
}

LossResult activity_loss(const Matrix& activities, const ActivityTargets& targets,
                         double alpha, double beta) {
  require(activities.same_shape(targets.per_speaker), ErrorCode::kInvalidArgument,
          "loss: activity and target shapes differ");
  require(activities.rows() == targets.vad.size() &&
              activities.rows() == targets.osd.size(),
          ErrorCode::kInvalidArgument, "loss: derived target rows differ");
  require(alpha >= 0.0 && beta >= 0.0, ErrorCode::kInvalidArgument,
          "loss: alpha and beta must be nonnegative");
  const std::size_t T = activities.rows();
  const std::size_t N = activities.cols();
  require(T > 0 && N > 0, ErrorCode::kInvalidArgument, "loss: empty activities");

  LossResult result;
  result.grad = Matrix(T, N, 0.0);

  const double slot_norm = 1.0 / static_cast<double>(T * N);
  const double frame_norm = 1.0 / static_cast<double>(T);
  double value = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < N; ++i) {
      value += slot_norm * bce(activities(t, i), targets.per_speaker(t, i));
      result.grad(t, i) +=
          slot_norm * bce_grad(activities(t, i), targets.per_speaker(t, i));
    }
    const auto [arg_max, arg_second] =
        max_and_second(std::span<const double>(activities.row(t), N));
    const double y_vad_hat = activities(t, arg_max);
    const double y_osd_hat =
        arg_second < N ? activities(t, arg_second) : 0.0;
    value += alpha * frame_norm * bce(y_vad_hat, targets.vad[t]);
    result.grad(t, arg_max) +=
        alpha * frame_norm * bce_grad(y_vad_hat, targets.vad[t]);
    value += beta * frame_norm * bce(y_osd_hat, targets.osd[t]);
    if (arg_second < N) {
      result.grad(t, arg_second) +=
          beta * frame_norm * bce_grad(y_osd_hat, targets.osd[t]);
    }
  }
  result.value = value;
  return result;
}

double forward_backward(const ModelParams& params, const FusedFeatures& features,
                        const ActivityTargets& targets, double alpha, double beta,
                        ModelGradients& grads) {
  ForwardState state;
  run_forward(params, features, state);
  const LossResult loss = activity_loss(state.probs, targets, alpha, beta);

  const ModelConfig& cfg = params.cfg;
  const std::size_t T = features.frames();
  const int N = cfg.n_slots;
  const int H = cfg.hidden;
  const int E = cfg.slot_embed;
  const int D = cfg.input_dim;
  const int k = cfg.context;
  const int Z = cfg.concat_dim();

  // d loss / d logit through the sigmoid.
  Matrix dlogit(T, static_cast<std::size_t>(N));
  for (std::size_t t = 0; t < T; ++t) {
    for (int i = 0; i < N; ++i) {
      const double p = state.probs(t, static_cast<std::size_t>(i));
      dlogit(t, static_cast<std::size_t>(i)) =
          loss.grad(t, static_cast<std::size_t>(i)) * p * (1.0 - p);
    }
  }

  // Combiner and its input gradient.
  std::vector<double> dconcat(T * static_cast<std::size_t>(Z), 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (int i = 0; i < N; ++i) {
      const double g = dlogit(t, static_cast<std::size_t>(i));
      if (g == 0.0) continue;
      grads.combiner_bias[static_cast<std::size_t>(i)] += g;
      for (int j = -k; j <= k; ++j) {
        const std::ptrdiff_t tj = static_cast<std::ptrdiff_t>(t) + j;
        if (tj < 0 || tj >= static_cast<std::ptrdiff_t>(T)) continue;
        Matrix& c_grad = grads.combiner[static_cast<std::size_t>(j + k)];
        const Matrix& c_j = params.combiner[static_cast<std::size_t>(j + k)];
        double* cg = c_grad.row(static_cast<std::size_t>(i));
        const double* cw = c_j.row(static_cast<std::size_t>(i));
        const double* z = state.concat.data() + static_cast<std::size_t>(tj) * Z;
        double* dz = dconcat.data() + static_cast<std::size_t>(tj) * Z;
        for (int c = 0; c < Z; ++c) {
          cg[c] += g * z[c];
          dz[c] += g * cw[c];
        }
      }
    }
  }

  // Detector layers, rebuilt inputs.
  std::vector<double> input(static_cast<std::size_t>(D));
  std::vector<double> dpre2(static_cast<std::size_t>(E));
  std::vector<double> dh(static_cast<std::size_t>(H));
  for (std::size_t t = 0; t < T; ++t) {
    for (int i = 0; i < N; ++i) {
      const double* e = state.concat.data() + (t * static_cast<std::size_t>(N) + i) * E;
      const double* dz = dconcat.data() + t * static_cast<std::size_t>(Z) + i * E;
      bool all_zero = true;
      for (int r = 0; r < E; ++r) {
        dpre2[static_cast<std::size_t>(r)] = dz[r] * (1.0 - e[r] * e[r]);
        if (dpre2[static_cast<std::size_t>(r)] != 0.0) all_zero = false;
      }
      if (all_zero) continue;

      const double* h = state.hidden.data() + (t * static_cast<std::size_t>(N) + i) * H;
      for (int r = 0; r < E; ++r) {
        const double g = dpre2[static_cast<std::size_t>(r)];
        if (g == 0.0) continue;
        grads.b2[static_cast<std::size_t>(r)] += g;
        double* w2g = grads.w2.row(static_cast<std::size_t>(r));
        for (int c = 0; c < H; ++c) w2g[c] += g * h[c];
      }
      for (int c = 0; c < H; ++c) {
        double acc = 0.0;
        for (int r = 0; r < E; ++r) {
          acc += params.w2(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) *
                 dpre2[static_cast<std::size_t>(r)];
        }
        dh[static_cast<std::size_t>(c)] = acc * (1.0 - h[c] * h[c]);
      }

      fill_input(features, t, i, input.data());
      for (int r = 0; r < H; ++r) {
        const double g = dh[static_cast<std::size_t>(r)];
        if (g == 0.0) continue;
        grads.b1[static_cast<std::size_t>(r)] += g;
        double* w1g = grads.w1.row(static_cast<std::size_t>(r));
        for (int c = 0; c < D; ++c) w1g[c] += g * input[static_cast<std::size_t>(c)];
      }
    }
  }
  return loss.value;
}

Matrix infer(const ModelParams& params, const FusedFeatures& features,
             double threshold) {
  require(threshold > 0.0 && threshold < 1.0, ErrorCode::kInvalidArgument,
          "infer: threshold must lie strictly inside (0, 1)");
  const Matrix probs = forward(params, features);
  Matrix binary(probs.rows(), probs.cols(), 0.0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    binary.data()[i] = probs.data()[i] >= threshold ? 1.0 : 0.0;
  }
  return binary;
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  AtomicFileWriter writer(path, /*binary=*/true);
  auto& out = writer.stream();
  out << "ADCKPT 1\n";
  out << "config " << params.cfg.input_dim << " " << params.cfg.hidden << " "
      << params.cfg.slot_embed << " " << params.cfg.n_slots << " "
      << params.cfg.context << "\n";
  out << "data\n";
  std::vector<double> flat;
  params.flatten(flat);
  write_raw_doubles(out, flat.data(), flat.size());
  writer.commit();
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    raise(ErrorCode::kMissingFile, "no such file: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::kMissingFile, "cannot open: " + path.string());

  std::string line;
  if (!std::getline(in, line) || line != "ADCKPT 1") {
    raise(ErrorCode::kUnsupportedFormat,
          path.string() + ": not an ADCKPT 1 checkpoint");
  }
  ModelConfig cfg;
  if (!std::getline(in, line)) {
    raise(ErrorCode::kMalformedFile, path.string() + ": truncated header");
  }
  {
    std::istringstream fields(line);
    std::string key;
    fields >> key >> cfg.input_dim >> cfg.hidden >> cfg.slot_embed >>
        cfg.n_slots >> cfg.context;
    if (key != "config" || fields.fail()) {
      raise(ErrorCode::kMalformedFile, path.string() + ": bad config line");
    }
  }
  if (!std::getline(in, line) || line != "data") {
    raise(ErrorCode::kMalformedFile, path.string() + ": missing data marker");
  }

  ModelParams params = ModelParams::init(cfg, 0);
  std::vector<double> flat(params.parameter_count());
  read_raw_doubles(in, flat.data(), flat.size(), path.string());
  params.unflatten(flat);
  return params;
}

// ------------------------- training -------------------------

namespace {

/// One training chunk: slot-aligned feature slices plus binary targets.
struct ChunkCache {
  std::size_t frames = 0;
  int n_bands = 0;
  double hop_seconds = 0.0;
  std::vector<float> acoustic;            // T * B, already normalized
  std::vector<std::vector<float>> af;     // per slot, T * B
  std::vector<double> thetas;
  std::vector<bool> is_virtual;
  std::vector<std::vector<double>> embeddings;
  std::vector<std::string> names;
  std::vector<std::uint8_t> targets;      // T * N
};

struct AugmentDraw {
  bool apply = false;
  int slot_i = 0;
  int slot_j = 1;
  double gamma = 1.0;
  double theta_n = 0.0;
};

/// Materializes a chunk into FusedFeatures/ActivityTargets, optionally with
/// slot permutation and close-speaker AF augmentation.
void build_chunk(const ChunkCache& chunk, const std::vector<int>& slot_order,
                 const AugmentDraw& aug, FusedFeatures& features,
                 ActivityTargets& targets) {
  const std::size_t T = chunk.frames;
  const int N = static_cast<int>(chunk.af.size());
  const int B = chunk.n_bands;

  features.session = "chunk";
  features.hop_seconds = chunk.hop_seconds;
  features.n_bands = B;
  features.acoustic = Matrix(T, static_cast<std::size_t>(B));
  for (std::size_t i = 0; i < features.acoustic.size(); ++i) {
    features.acoustic.data()[i] = static_cast<double>(chunk.acoustic[i]);
  }

  features.slots.assign(static_cast<std::size_t>(N), SlotFeatures{});
  std::vector<double> thetas(static_cast<std::size_t>(N));
  for (int pos = 0; pos < N; ++pos) {
    const int src = slot_order[static_cast<std::size_t>(pos)];
    SlotFeatures& slot = features.slots[static_cast<std::size_t>(pos)];
    slot.name = chunk.names[static_cast<std::size_t>(src)];
    slot.theta_deg = chunk.thetas[static_cast<std::size_t>(src)];
    slot.is_virtual = chunk.is_virtual[static_cast<std::size_t>(src)];
    slot.embedding = chunk.embeddings[static_cast<std::size_t>(src)];
    slot.af = Matrix(T, static_cast<std::size_t>(B));
    const auto& src_af = chunk.af[static_cast<std::size_t>(src)];
    for (std::size_t i = 0; i < slot.af.size(); ++i) {
      slot.af.data()[i] = static_cast<double>(src_af[i]);
    }
    thetas[static_cast<std::size_t>(pos)] = slot.theta_deg;
  }

  if (aug.apply) {
    SlotFeatures& a = features.slots[static_cast<std::size_t>(aug.slot_i)];
    SlotFeatures& b = features.slots[static_cast<std::size_t>(aug.slot_j)];
    const AugmentedAf mixed = augment_af(a.af, b.af, a.theta_deg, b.theta_deg,
                                         aug.gamma, aug.theta_n);
    a.af = mixed.af_i;
    b.af = mixed.af_j;
    a.theta_deg = mixed.theta_shared_deg;
    b.theta_deg = mixed.theta_shared_deg;
    thetas[static_cast<std::size_t>(aug.slot_i)] = mixed.theta_shared_deg;
    thetas[static_cast<std::size_t>(aug.slot_j)] = mixed.theta_shared_deg;
  }

  const auto deltas = min_angular_difference(thetas);
  for (int pos = 0; pos < N; ++pos) {
    features.slots[static_cast<std::size_t>(pos)].delta_theta_deg =
        deltas[static_cast<std::size_t>(pos)];
  }

  Matrix target_matrix(T, static_cast<std::size_t>(N), 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (int pos = 0; pos < N; ++pos) {
      const int src = slot_order[static_cast<std::size_t>(pos)];
      target_matrix(t, static_cast<std::size_t>(pos)) = static_cast<double>(
          chunk.targets[t * static_cast<std::size_t>(N) +
                        static_cast<std::size_t>(src)]);
    }
  }
  targets = ActivityTargets::from_matrix(std::move(target_matrix));
}

std::vector<ChunkCache> build_chunk_caches(const std::vector<SceneTruth>& scenes,
                                           const TrainConfig& cfg,
                                           const FeatureExtractConfig& feature_cfg,
                                           const GeometrySpec& geometry) {
  std::vector<ChunkCache> chunks;
  for (const SceneTruth& scene : scenes) {
    const FusedFeatures features = extract_features(
        scene.audio, geometry, scene.profiles, feature_cfg, scene.annotation.session);
    const std::size_t T = features.frames();
    const int N = features.n_slots();

    std::vector<std::string> slot_names;
    for (const SlotFeatures& slot : features.slots) slot_names.push_back(slot.name);
    const Matrix scene_targets = segments_to_frames(
        scene.annotation, features.hop_seconds, slot_names, T);

    const std::size_t chunk_frames = static_cast<std::size_t>(
        std::llround(cfg.chunk_seconds / features.hop_seconds));
    if (chunk_frames == 0 || T < chunk_frames) continue;
    const int B = features.n_bands;
    for (std::size_t start = 0; start + chunk_frames <= T; start += chunk_frames) {
      ChunkCache chunk;
      chunk.frames = chunk_frames;
      chunk.n_bands = B;
      chunk.hop_seconds = features.hop_seconds;
      chunk.acoustic.resize(chunk_frames * static_cast<std::size_t>(B));
      for (std::size_t t = 0; t < chunk_frames; ++t) {
        for (int b = 0; b < B; ++b) {
          chunk.acoustic[t * static_cast<std::size_t>(B) +
                         static_cast<std::size_t>(b)] =
              static_cast<float>(features.acoustic(start + t,
                                                   static_cast<std::size_t>(b)));
        }
      }
      for (const SlotFeatures& slot : features.slots) {
        std::vector<float> af(chunk_frames * static_cast<std::size_t>(B));
        for (std::size_t t = 0; t < chunk_frames; ++t) {
          for (int b = 0; b < B; ++b) {
            af[t * static_cast<std::size_t>(B) + static_cast<std::size_t>(b)] =
                static_cast<float>(slot.af(start + t, static_cast<std::size_t>(b)));
          }
        }
        chunk.af.push_back(std::move(af));
        chunk.thetas.push_back(slot.theta_deg);
        chunk.is_virtual.push_back(slot.is_virtual);
        chunk.embeddings.push_back(slot.embedding);
        chunk.names.push_back(slot.name);
      }
      chunk.targets.resize(chunk_frames * static_cast<std::size_t>(N));
      for (std::size_t t = 0; t < chunk_frames; ++t) {
        for (int i = 0; i < N; ++i) {
          chunk.targets[t * static_cast<std::size_t>(N) +
                        static_cast<std::size_t>(i)] =
              scene_targets(start + t, static_cast<std::size_t>(i)) != 0.0 ? 1 : 0;
        }
      }
      chunks.push_back(std::move(chunk));
    }
  }
  return chunks;
}

}  // namespace

TrainResult train(const std::vector<SceneTruth>& scenes, const TrainConfig& cfg,
                  const FeatureExtractConfig& feature_cfg,
                  const GeometrySpec& geometry) {
  require(!scenes.empty(), ErrorCode::kInvalidArgument, "train: empty scene set");
  require(cfg.batch_size >= 1 && cfg.max_epochs >= 1, ErrorCode::kInvalidArgument,
          "train: batch_size and max_epochs must be positive");

  const auto chunks = build_chunk_caches(scenes, cfg, feature_cfg, geometry);
  require(!chunks.empty(), ErrorCode::kInvalidArgument,
          "train: scenes yield no full chunks at this chunk length");

  ModelConfig model_cfg;
  model_cfg.input_dim = 2 * feature_cfg.n_bands + 1 + kEmbeddingDim;
  model_cfg.hidden = cfg.hidden;
  model_cfg.slot_embed = cfg.slot_embed;
  model_cfg.n_slots = cfg.n_slots;
  model_cfg.context = cfg.context;

  ModelParams params = ModelParams::init(model_cfg, cfg.seed);
  const int n_slots = model_cfg.n_slots;

  // Deterministic split into train and validation chunks.
  std::vector<std::size_t> order(chunks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng split_rng(mix_seed(cfg.seed, 0x5b117));
  split_rng.shuffle(order);
  std::size_t n_val = static_cast<std::size_t>(
      std::floor(cfg.val_fraction * static_cast<double>(chunks.size())));
  if (n_val >= chunks.size()) n_val = chunks.size() - 1;
  std::vector<std::size_t> val_idx(order.begin(),
                                   order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val),
                                     order.end());

  std::vector<int> identity_order(static_cast<std::size_t>(n_slots));
  for (int i = 0; i < n_slots; ++i) identity_order[static_cast<std::size_t>(i)] = i;

  FusedFeatures scratch_features;
  ActivityTargets scratch_targets;

  auto eval_mean_loss = [&](const ModelParams& p,
                            const std::vector<std::size_t>& idx) {
    if (idx.empty()) return 0.0;
    double sum = 0.0;
    for (const std::size_t c : idx) {
      build_chunk(chunks[c], identity_order, AugmentDraw{}, scratch_features,
                  scratch_targets);
      const Matrix probs = forward(p, scratch_features);
      sum += activity_loss(probs, scratch_targets, cfg.alpha, cfg.beta).value;
    }
    return sum / static_cast<double>(idx.size());
  };

  TrainResult result;
  result.initial_loss = eval_mean_loss(params, train_idx);

  // Adam state over the flattened parameters.
  std::vector<double> flat, grad_flat;
  params.flatten(flat);
  std::vector<double> m(flat.size(), 0.0), v(flat.size(), 0.0);
  double lr = cfg.learning_rate;
  long step = 0;
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;

  ModelGradients grads(model_cfg);
  double best_val = 0.0;
  bool have_best = false;
  ModelParams best_params = params;
  int plateau = 0, since_best = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Rng epoch_rng(mix_seed(cfg.seed, 0xe0000 + static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> shuffled = train_idx;
    epoch_rng.shuffle(shuffled);

    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < shuffled.size();
         begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(
          shuffled.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      grads.zero();
      double batch_loss = 0.0;
      for (std::size_t b = begin; b < end; ++b) {
        const ChunkCache& chunk = chunks[shuffled[b]];

        std::vector<int> slot_order = identity_order;
        if (cfg.shuffle_slots) epoch_rng.shuffle(slot_order);

        AugmentDraw aug;
        if (cfg.af_augment && epoch_rng.bernoulli(cfg.augment_probability)) {
          std::vector<int> real_positions;
          for (int pos = 0; pos < n_slots; ++pos) {
            const int src = slot_order[static_cast<std::size_t>(pos)];
            if (!chunk.is_virtual[static_cast<std::size_t>(src)]) {
              real_positions.push_back(pos);
            }
          }
          if (real_positions.size() >= 2) {
            const int a = epoch_rng.uniform_int(
                0, static_cast<int>(real_positions.size()) - 1);
            int b_pick = a;
            while (b_pick == a) {
              b_pick = epoch_rng.uniform_int(
                  0, static_cast<int>(real_positions.size()) - 1);
            }
            aug.apply = true;
            aug.slot_i = real_positions[static_cast<std::size_t>(a)];
            aug.slot_j = real_positions[static_cast<std::size_t>(b_pick)];
            aug.gamma = epoch_rng.uniform(cfg.gamma_lo, cfg.gamma_hi);
            aug.theta_n = epoch_rng.uniform(0.0, cfg.theta_n_max_deg);
          }
        }

        build_chunk(chunk, slot_order, aug, scratch_features, scratch_targets);
        batch_loss += forward_backward(params, scratch_features, scratch_targets,
                                       cfg.alpha, cfg.beta, grads);
      }
      const double count = static_cast<double>(end - begin);
      batch_loss /= count;
      if (!std::isfinite(batch_loss)) {
        raise(ErrorCode::kNumericFailure,
              "train: non-finite loss at epoch " + std::to_string(epoch) +
                  ", batch " + std::to_string(batches));
      }
      epoch_loss += batch_loss;
      ++batches;

      params.flatten(flat);
      grads.flatten(grad_flat);
      ++step;
      const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t i = 0; i < flat.size(); ++i) {
        const double g = grad_flat[i] / count;
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g * g;
        flat[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kAdamEps);
      }
      params.unflatten(flat);
    }
    result.train_loss.push_back(epoch_loss / static_cast<double>(batches));

    const double val =
        val_idx.empty() ? result.train_loss.back() : eval_mean_loss(params, val_idx);
    if (!std::isfinite(val)) {
      raise(ErrorCode::kNumericFailure,
            "train: non-finite validation loss at epoch " + std::to_string(epoch));
    }
    result.val_loss.push_back(val);

    if (!have_best || val < best_val - 1e-9) {
      best_val = val;
      have_best = true;
      best_params = params;
      result.best_epoch = epoch;
      plateau = 0;
      since_best = 0;
    } else {
      ++plateau;
      ++since_best;
      if (plateau >= cfg.plateau_patience && lr > cfg.min_learning_rate) {
        lr = std::max(lr * cfg.plateau_factor, cfg.min_learning_rate);
        plateau = 0;
      }
      if (since_best >= cfg.early_stop_patience) break;
    }
  }

  result.params = std::move(best_params);
  result.best_val_loss = best_val;
  return result;
}

}  // namespace arraydiar
