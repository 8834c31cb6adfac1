// core/src/profile.cpp

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

#include "arraydiar/profile.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "arraydiar/error.hpp"
#include "arraydiar/io.hpp"

namespace arraydiar {

std::vector<SpeakerProfile> read_profiles(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    raise(ErrorCode::kMissingFile, "no such file: " + path.string());
  }
  std::ifstream in(path);
  if (!in) raise(ErrorCode::kMissingFile, "cannot open: " + path.string());

  std::vector<SpeakerProfile> profiles;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    if (raw.find_first_not_of(" \t\r\n") == std::string::npos) continue;

    std::istringstream fields(raw);
    std::string tag;
    SpeakerProfile profile;
    bool have_id = false;
    while (fields >> tag) {
      if (tag == "speaker") {
        have_id = static_cast<bool>(fields >> profile.id);
      } else if (tag == "theta") {
        fields >> profile.theta_deg;
      } else if (tag == "delta") {
        fields >> profile.delta_theta_deg;
      } else if (tag == "conf") {
        fields >> profile.confidence;
      } else if (tag == "emb") {
        double v = 0.0;
        while (fields >> v) profile.embedding.push_back(v);
      } else {
        raise(ErrorCode::kMalformedFile,
              path.string() + ":" + std::to_string(line_no) +
                  ": unknown profile field '" + tag + "'");
      }
      if (fields.fail() && !fields.eof()) {
        raise(ErrorCode::kMalformedFile,
              path.string() + ":" + std::to_string(line_no) +
                  ": bad value after '" + tag + "'");
      }
    }
    if (!have_id) {
      raise(ErrorCode::kMalformedFile,
            path.string() + ":" + std::to_string(line_no) + ": missing speaker id");
    }
    if (!profile.embedding.empty() &&
        profile.embedding.size() != static_cast<std::size_t>(kEmbeddingDim)) {
      raise(ErrorCode::kMalformedFile,
            path.string() + ":" + std::to_string(line_no) + ": expected " +
                std::to_string(kEmbeddingDim) + " embedding values, got " +
                std::to_string(profile.embedding.size()));
    }
    profiles.push_back(std::move(profile));
  }
  return profiles;
}

void write_profiles(const std::vector<SpeakerProfile>& profiles,
                    const std::filesystem::path& path) {
  AtomicFileWriter writer(path);
  auto& out = writer.stream();
  char buf[64];
  for (const SpeakerProfile& p : profiles) {
    out << "speaker " << p.id;
    std::snprintf(buf, sizeof(buf), " theta %.17g", p.theta_deg);
    out << buf;
    std::snprintf(buf, sizeof(buf), " delta %.17g", p.delta_theta_deg);
    out << buf;
    std::snprintf(buf, sizeof(buf), " conf %.17g", p.confidence);
    out << buf;
    if (!p.embedding.empty()) {
      out << " emb";
      for (const double v : p.embedding) {
        std::snprintf(buf, sizeof(buf), " %.17g", v);
        out << buf;
      }
    }
    out << "\n";
  }
  writer.commit();
}

}  // namespace arraydiar
