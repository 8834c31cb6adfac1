// core/include/arraydiar/annotations.hpp

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
#include <string>
#include <vector>

#include "arraydiar/matrix.hpp"

namespace arraydiar {

/// Half-open time interval [begin, end) in seconds.
struct Interval {
  double begin = 0.0;
  double end = 0.0;
  double length() const { return end - begin; }
};

/// Sorts and merges overlapping or touching intervals.
std::vector<Interval> merge_intervals(std::vector<Interval> intervals);
/// Set difference a \ b (both need not be merged beforehand).
std::vector<Interval> subtract_intervals(std::vector<Interval> a,
                                         std::vector<Interval> b);
std::vector<Interval> intersect_intervals(std::vector<Interval> a,
                                          std::vector<Interval> b);
double total_length(std::span<const Interval> intervals);

struct Segment {
  std::string speaker;
  double onset = 0.0;
  double duration = 0.0;
  double offset() const { return onset + duration; }
};

/// "Who spoke when" for one session.
struct Annotation {
  std::string session = "session";
  std::vector<Segment> segments;

  /// Unique speaker ids, sorted.
  std::vector<std::string> speakers() const;
  /// Merged intervals of one speaker.
  std::vector<Interval> speaker_intervals(const std::string& speaker) const;
  /// Per-speaker merged and chronologically sorted copy.
  Annotation normalized() const;
  double max_offset() const;
};

/// RTTM reader: SPEAKER <session> 1 <onset> <dur> <NA> <NA> <spk> <NA> <NA>.
/// Segments are grouped per session, in first-appearance order. Malformed
/// lines raise kMalformedFile with the line number.
std::vector<Annotation> rttm_read(const std::filesystem::path& path);
std::vector<Annotation> rttm_parse(const std::string& text,
                                   const std::string& origin = "<string>");

/// Writer; fixed-point with 2-digit precision. Negative onsets or
/// nonpositive durations raise kInvalidArgument.
void rttm_write(std::span<const Annotation> annotations,
                const std::filesystem::path& path);
std::string rttm_to_string(std::span<const Annotation> annotations);

/// Maximal runs of nonzero entries per column become segments; frame t
/// covers [t*hop, (t+1)*hop).
Annotation frames_to_segments(const Matrix& frames, double hop_seconds,
                              std::span<const std::string> speaker_names,
                              const std::string& session = "session");

/// Inverse of frames_to_segments: a frame is active when its span midpoint
/// falls inside a speaker segment.
Matrix segments_to_frames(const Annotation& annotation, double hop_seconds,
                          std::span<const std::string> speaker_names,
                          std::size_t n_frames);

/// Fills per-speaker gaps <= max_gap, then drops segments < min_on.
/// Idempotent.
Annotation postprocess(const Annotation& annotation, double min_on,
                       double max_gap);

/// Time with >= 2 active speakers over time with >= 1 active speaker.
double overlap_ratio(const Annotation& annotation);

}  // namespace arraydiar
