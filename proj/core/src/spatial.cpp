// core/src/spatial.cpp

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

#include "arraydiar/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "arraydiar/error.hpp"
#include "arraydiar/io.hpp"

namespace arraydiar {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

void check_pair(const ArrayGeometry& geom, MicPair pair) {
  require(pair.m1 != pair.m2, ErrorCode::kInvalidArgument,
          "mic pair indices must differ");
  require(pair.m1 >= 0 && pair.m1 < geom.mic_count() && pair.m2 >= 0 &&
              pair.m2 < geom.mic_count(),
          ErrorCode::kInvalidArgument, "mic pair index out of range");
}

}  // namespace

void ArrayGeometry::validate() const {
  require(mic_count() >= 2, ErrorCode::kInvalidArgument,
          "geometry needs at least two microphones");
  require(sound_speed > 0.0, ErrorCode::kInvalidArgument,
          "sound speed must be positive");
  for (int i = 0; i < mic_count(); ++i) {
    for (int j = i + 1; j < mic_count(); ++j) {
      const double dx = mic_positions[i].x - mic_positions[j].x;
      const double dy = mic_positions[i].y - mic_positions[j].y;
      require(dx * dx + dy * dy > 0.0, ErrorCode::kInvalidArgument,
              "microphones " + std::to_string(i) + " and " + std::to_string(j) +
                  " coincide");
    }
  }
}

ArrayGeometry ArrayGeometry::circular(int n_mics, double radius_m,
                                      double sound_speed) {
  require(n_mics >= 2, ErrorCode::kInvalidArgument, "need at least two mics");
  require(radius_m > 0.0, ErrorCode::kInvalidArgument, "radius must be positive");
  ArrayGeometry geom;
  geom.sound_speed = sound_speed;
  geom.mic_positions.reserve(static_cast<std::size_t>(n_mics));
  for (int k = 0; k < n_mics; ++k) {
    const double a = 2.0 * std::numbers::pi * k / n_mics;
    geom.mic_positions.push_back({radius_m * std::cos(a), radius_m * std::sin(a)});
  }
  return geom;
}

std::vector<MicPair> default_pairs(int n_mics) {
  require(n_mics >= 2 && n_mics % 2 == 0, ErrorCode::kInvalidArgument,
          "diametric pairs need an even mic count");
  std::vector<MicPair> pairs;
  for (int k = 0; k < n_mics / 2; ++k) pairs.push_back({k, k + n_mics / 2});
  return pairs;
}

GeometrySpec default_geometry() {
  GeometrySpec spec;
  spec.geometry = ArrayGeometry::circular(8, 0.0425);
  spec.pairs = default_pairs(8);
  return spec;
}

GeometrySpec load_geometry(const std::filesystem::path& path) {
  const KeyValueFile file = KeyValueFile::parse_file(path);
  file.check_known({"sound_speed", "mic", "pair"});

  GeometrySpec spec;
  spec.geometry.sound_speed = file.get_double_or("sound_speed", 343.0);
  for (const auto& line : file.all("mic")) {
    std::istringstream in(line.value);
    Vec2 p;
    if (!(in >> p.x >> p.y)) {
      raise(ErrorCode::kMalformedFile,
            file.origin() + ":" + std::to_string(line.line_no) +
                ": mic line needs two coordinates");
    }
    spec.geometry.mic_positions.push_back(p);
  }
  for (const auto& line : file.all("pair")) {
    std::istringstream in(line.value);
    int a = 0, b = 0;
    if (!(in >> a >> b)) {
      raise(ErrorCode::kMalformedFile,
            file.origin() + ":" + std::to_string(line.line_no) +
                ": pair line needs two 1-based indices");
    }
    spec.pairs.push_back({a - 1, b - 1});
  }
  spec.geometry.validate();
  if (spec.pairs.empty()) {
    raise(ErrorCode::kMalformedFile, file.origin() + ": no pair lines");
  }
  for (const auto& pair : spec.pairs) check_pair(spec.geometry, pair);
  return spec;
}

void save_geometry(const GeometrySpec& spec, const std::filesystem::path& path) {
  AtomicFileWriter writer(path);
  auto& out = writer.stream();
  out << "sound_speed " << spec.geometry.sound_speed << "\n";
  for (const auto& p : spec.geometry.mic_positions) {
    out << "mic " << p.x << " " << p.y << "\n";
  }
  for (const auto& pair : spec.pairs) {
    out << "pair " << pair.m1 + 1 << " " << pair.m2 + 1 << "\n";
  }
  writer.commit();
}

double wrap_degrees(double degrees) {
  double d = std::fmod(degrees, 360.0);
  if (d < 0.0) d += 360.0;
  return d;
}

double circular_distance_deg(double a, double b) {
  const double d = std::fabs(wrap_degrees(a) - wrap_degrees(b));
  return std::min(d, 360.0 - d);
}

double circular_midpoint_deg(double a, double b) {
  // Signed shorter-arc difference in (-180, 180]; antipodal inputs give +180
  // so the midpoint resolves to a + 90.
  double diff = wrap_degrees(b) - wrap_degrees(a);
  if (diff > 180.0) diff -= 360.0;
  if (diff <= -180.0) diff += 360.0;
  return wrap_degrees(wrap_degrees(a) + 0.5 * diff);
}

double wrap_pi(double radians) {
  double r = std::remainder(radians, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

PairBaseline pair_baseline(const ArrayGeometry& geom, MicPair pair) {
  check_pair(geom, pair);
  const Vec2 p1 = geom.mic_positions[static_cast<std::size_t>(pair.m1)];
  const Vec2 p2 = geom.mic_positions[static_cast<std::size_t>(pair.m2)];
  const double dx = p2.x - p1.x;
  const double dy = p2.y - p1.y;
  const double delta = std::hypot(dx, dy);
  require(delta > 0.0, ErrorCode::kInvalidArgument, "mic pair is coincident");
  PairBaseline b;
  b.delta_m = delta;
  b.axis_deg = wrap_degrees(std::atan2(dy, dx) / kDegToRad);
  return b;
}

double steering_phase(const ArrayGeometry& geom, MicPair pair, double theta_deg,
                      double freq_hz) {
  check_pair(geom, pair);
  require(freq_hz >= 0.0, ErrorCode::kInvalidArgument,
          "frequency must be nonnegative");
  const Vec2 p1 = geom.mic_positions[static_cast<std::size_t>(pair.m1)];
  const Vec2 p2 = geom.mic_positions[static_cast<std::size_t>(pair.m2)];
  // delta * cos(theta_rel) as a projection onto the m2 -> m1 baseline, the
  // orientation under which a wave from theta yields a positive IPD.
  const double ux = std::cos(theta_deg * kDegToRad);
  const double uy = std::sin(theta_deg * kDegToRad);
  const double proj = (p1.x - p2.x) * ux + (p1.y - p2.y) * uy;
  return 2.0 * std::numbers::pi * freq_hz * proj / geom.sound_speed;
}

Matrix ipd(const ChannelSpectrogram& spec, MicPair pair) {
  require(pair.m1 >= 0 && pair.m1 < spec.channel_count() && pair.m2 >= 0 &&
              pair.m2 < spec.channel_count() && pair.m1 != pair.m2,
          ErrorCode::kInvalidArgument, "ipd: channel pair out of range");
  Matrix out(spec.frame_count, spec.bin_count);
  const auto& x1 = spec.values[static_cast<std::size_t>(pair.m1)];
  const auto& x2 = spec.values[static_cast<std::size_t>(pair.m2)];
  for (std::size_t i = 0; i < x1.size(); ++i) {
    // arg(X1 * conj(X2)) equals the wrapped phase difference.
    out.data()[i] = std::arg(x1[i] * std::conj(x2[i]));
  }
  // atan2 returns [-pi, pi]; fold -pi onto +pi to keep the (-pi, pi] range.
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.data()[i] <= -std::numbers::pi) out.data()[i] = std::numbers::pi;
  }
  return out;
}

AngleFeature angle_feature(const ChannelSpectrogram& spec,
                           const ArrayGeometry& geom,
                           std::span<const MicPair> pairs, double theta_deg,
                           bool normalize) {
  require(!pairs.empty(), ErrorCode::kInvalidArgument,
          "angle_feature: empty pair list");
  geom.validate();

  AngleFeature af;
  af.theta_deg = wrap_degrees(theta_deg);
  af.normalized = normalize;
  af.values = Matrix(spec.frame_count, spec.bin_count, 0.0);

  const std::size_t n_bins = spec.bin_count;
  std::vector<double> steer_cos(n_bins), steer_sin(n_bins);

  for (const MicPair pair : pairs) {
    require(pair.m1 < spec.channel_count() && pair.m2 < spec.channel_count() &&
                pair.m1 >= 0 && pair.m2 >= 0,
            ErrorCode::kInvalidArgument, "angle_feature: pair out of range");
    for (std::size_t f = 0; f < n_bins; ++f) {
      const double phase = steering_phase(geom, pair, theta_deg, spec.bin_hz(f));
      steer_cos[f] = std::cos(phase);
      steer_sin[f] = std::sin(phase);
    }
    const auto& x1 = spec.values[static_cast<std::size_t>(pair.m1)];
    const auto& x2 = spec.values[static_cast<std::size_t>(pair.m2)];
    double* out = af.values.data();
    for (std::size_t t = 0; t < spec.frame_count; ++t) {
      const std::size_t base = t * n_bins;
      for (std::size_t f = 0; f < n_bins; ++f) {
        // cos(steer - ipd) expanded through the normalized cross-spectrum,
        // avoiding per-bin atan2/cos. Zero-energy bins behave like ipd = 0.
        const std::complex<double> cross = x1[base + f] * std::conj(x2[base + f]);
        const double mag = std::abs(cross);
        double cos_ipd = 1.0, sin_ipd = 0.0;
        if (mag > 0.0) {
          cos_ipd = cross.real() / mag;
          sin_ipd = cross.imag() / mag;
        }
        out[base + f] += steer_cos[f] * cos_ipd + steer_sin[f] * sin_ipd;
      }
    }
  }

  if (normalize) {
    const double inv = 1.0 / static_cast<double>(pairs.size());
    for (std::size_t i = 0; i < af.values.size(); ++i) af.values.data()[i] *= inv;
  }
  return af;
}

AugmentedAf augment_af(const Matrix& af_i, const Matrix& af_j, double theta_i_deg,
                       double theta_j_deg, double gamma, double theta_n_deg) {
  require(af_i.same_shape(af_j), ErrorCode::kInvalidArgument,
          "augment_af: feature shapes differ");
  require(gamma >= 0.0 && gamma <= 1.0, ErrorCode::kInvalidArgument,
          "augment_af: gamma must lie in [0, 1]");

  AugmentedAf out;
  out.af_i = af_i;
  out.af_j = af_j;
  for (std::size_t k = 0; k < af_i.size(); ++k) {
    const double a = af_i.data()[k];
    const double b = af_j.data()[k];
    out.af_i.data()[k] = std::max(a, gamma * b);
    out.af_j.data()[k] = std::max(gamma * a, b);
  }
  out.theta_shared_deg =
      wrap_degrees(circular_midpoint_deg(theta_i_deg, theta_j_deg) + theta_n_deg);
  return out;
}

std::vector<double> min_angular_difference(std::span<const double> thetas_deg) {
  require(!thetas_deg.empty(), ErrorCode::kInvalidArgument,
          "min_angular_difference: empty input");
  const std::size_t n = thetas_deg.size();
  // Sentinel for a lone speaker: no neighbor closer than the antipode.
  std::vector<double> result(n, 180.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      result[i] = std::min(result[i],
                           circular_distance_deg(thetas_deg[i], thetas_deg[k]));
    }
  }
  return result;
}

}  // namespace arraydiar
