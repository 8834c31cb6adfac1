// core/include/arraydiar/profile.hpp

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
#include <string>
#include <vector>

namespace arraydiar {

inline constexpr int kEmbeddingDim = 16;

/// Enrolled-speaker profile: direction of arrival, minimum angular
/// difference to any other speaker, and a fixed-dimension embedding.
struct SpeakerProfile {
  std::string id;
  double theta_deg = 0.0;
  double delta_theta_deg = 180.0;
  double confidence = 0.0;
  std::vector<double> embedding;  // kEmbeddingDim values, or empty

  bool close_pair() const { return delta_theta_deg <= 45.0; }
};

/// Profile sidecar file: one line per speaker,
///   speaker <id> theta <deg> delta <deg> conf <v> emb <v1> ... <vK>
/// The emb fields are optional.
std::vector<SpeakerProfile> read_profiles(const std::filesystem::path& path);
void write_profiles(const std::vector<SpeakerProfile>& profiles,
                    const std::filesystem::path& path);

}  // namespace arraydiar
