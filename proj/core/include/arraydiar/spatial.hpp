// core/include/arraydiar/spatial.hpp

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

#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "arraydiar/audio.hpp"
#include "arraydiar/matrix.hpp"

namespace arraydiar {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Planar microphone array geometry. Angles are measured counterclockwise
/// from the +x axis, in degrees.
struct ArrayGeometry {
  std::vector<Vec2> mic_positions;
  double sound_speed = 343.0;

  int mic_count() const { return static_cast<int>(mic_positions.size()); }
  void validate() const;

  /// Uniform circular array; mic k sits at angle 360*k/n degrees.
  static ArrayGeometry circular(int n_mics, double radius_m,
                                double sound_speed = 343.0);
};

/// Channel indices of a microphone pair (0-based).
struct MicPair {
  int m1 = 0;
  int m2 = 0;
};

/// Diametric pairs of an n-mic circular array: (0,n/2), (1,n/2+1), ...
std::vector<MicPair> default_pairs(int n_mics = 8);

struct GeometrySpec {
  ArrayGeometry geometry;
  std::vector<MicPair> pairs;
};

/// Geometry file: "sound_speed <m/s>", one "mic <x> <y>" line per element,
/// one "pair <i> <j>" line per pair with 1-based indices.
GeometrySpec load_geometry(const std::filesystem::path& path);
void save_geometry(const GeometrySpec& spec, const std::filesystem::path& path);
GeometrySpec default_geometry();

// Circular-angle helpers (degrees).
double wrap_degrees(double degrees);                    // -> [0, 360)
double circular_distance_deg(double a, double b);       // -> [0, 180]
/// Midpoint along the shorter arc; for antipodal inputs resolves to a + 90.
double circular_midpoint_deg(double a, double b);
double wrap_pi(double radians);                         // -> (-pi, pi]

struct PairBaseline {
  double delta_m = 0.0;   // Euclidean distance between the two mics
  double axis_deg = 0.0;  // direction of the m1 -> m2 vector
};

PairBaseline pair_baseline(const ArrayGeometry& geom, MicPair pair);

/// Theoretical phase difference of a far-field plane wave from direction
/// theta at frequency f, matching the ipd() sign convention: positive along
/// the m2 -> m1 direction, 2*pi*f*delta*cos(theta_rel)/c.
double steering_phase(const ArrayGeometry& geom, MicPair pair, double theta_deg,
                      double freq_hz);

/// Inter-channel phase difference angle(X_m1) - angle(X_m2), wrapped to
/// (-pi, pi]. T x F.
Matrix ipd(const ChannelSpectrogram& spec, MicPair pair);

/// Per-look-direction angle feature: sum over pairs of
/// cos(steering_phase - IPD), optionally normalized by the pair count so a
/// dominating source from theta pushes values toward 1.
struct AngleFeature {
  double theta_deg = 0.0;
  bool normalized = true;
  Matrix values;  // T x F
};

AngleFeature angle_feature(const ChannelSpectrogram& spec,
                           const ArrayGeometry& geom,
                           std::span<const MicPair> pairs, double theta_deg,
                           bool normalize = true);

/// Close-speaker feature augmentation: each side keeps the pointwise max of
/// its own feature and the other scaled by gamma; both speakers move to the
/// circular midpoint of their directions plus a perturbation theta_n.
struct AugmentedAf {
  Matrix af_i;
  Matrix af_j;
  double theta_shared_deg = 0.0;
};

AugmentedAf augment_af(const Matrix& af_i, const Matrix& af_j, double theta_i_deg,
                       double theta_j_deg, double gamma, double theta_n_deg);

/// Minimum circular distance from each direction to any other. A single
/// direction yields the documented sentinel of 180 degrees.
std::vector<double> min_angular_difference(std::span<const double> thetas_deg);

}  // namespace arraydiar
