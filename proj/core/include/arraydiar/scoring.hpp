// core/include/arraydiar/scoring.hpp

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

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "arraydiar/annotations.hpp"

namespace arraydiar {

/// One-to-one partial mapping from reference to hypothesis labels.
using SpeakerMapping = std::vector<std::pair<std::string, std::string>>;

/// Mapping maximizing total overlapped time, exhaustive over injections.
/// Pairs with zero overlap stay unmapped. Bounded at 8 speakers per side.
SpeakerMapping map_speakers(const Annotation& ref, const Annotation& hyp);

/// Diarization error report. All rates are percentages of the scored
/// reference speaker time; der == fa + miss + sc exactly.
struct DerReport {
  double fa = 0.0;
  double miss = 0.0;
  double sc = 0.0;
  double der = 0.0;
  double jer = 0.0;
  double scored_time = 0.0;  // reference speaker-time inside scored regions
  SpeakerMapping speaker_mapping;
};

/// Region-based scoring with overlap counted. A +/-collar zone around every
/// reference segment boundary is excluded from scoring; the label mapping is
/// computed on the full timeline. JER is computed without a collar.
DerReport der(const Annotation& ref, const Annotation& hyp, double collar);

/// Mean over reference speakers of (1 - intersection/union) * 100 against
/// the mapped hypothesis speaker; unmapped reference speakers score 100.
double jer(const Annotation& ref, const Annotation& hyp,
           const SpeakerMapping& mapping);

/// Per-session reports plus a time-weighted aggregate. Sessions are matched
/// by id; a reference session without a hypothesis counterpart is scored
/// against an empty hypothesis.
struct SessionScores {
  std::vector<std::pair<std::string, DerReport>> sessions;
  DerReport overall;
};

SessionScores score_sessions(std::span<const Annotation> refs,
                             std::span<const Annotation> hyps, double collar);

/// Aligned text table followed by machine-readable key/value lines.
std::string format_report(const SessionScores& scores);

}  // namespace arraydiar
