// core/src/annotations.cpp

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

#include "arraydiar/annotations.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "arraydiar/error.hpp"
#include "arraydiar/io.hpp"

namespace arraydiar {

std::vector<Interval> merge_intervals(std::vector<Interval> intervals) {
  std::erase_if(intervals, [](const Interval& iv) { return iv.length() <= 0.0; });
  std::sort(intervals.begin(), intervals.end(),
            [](const Interval& a, const Interval& b) { return a.begin < b.begin; });
  std::vector<Interval> out;
  for (const Interval& iv : intervals) {
    if (!out.empty() && iv.begin <= out.back().end) {
      out.back().end = std::max(out.back().end, iv.end);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

std::vector<Interval> subtract_intervals(std::vector<Interval> a,
                                         std::vector<Interval> b) {
  a = merge_intervals(std::move(a));
  b = merge_intervals(std::move(b));
  std::vector<Interval> out;
  for (const Interval& iv : a) {
    double cursor = iv.begin;
    for (const Interval& cut : b) {
      if (cut.end <= cursor) continue;
      if (cut.begin >= iv.end) break;
      if (cut.begin > cursor) out.push_back({cursor, std::min(cut.begin, iv.end)});
      cursor = std::max(cursor, cut.end);
      if (cursor >= iv.end) break;
    }
    if (cursor < iv.end) out.push_back({cursor, iv.end});
  }
  return out;
}

std::vector<Interval> intersect_intervals(std::vector<Interval> a,
                                          std::vector<Interval> b) {
  a = merge_intervals(std::move(a));
  b = merge_intervals(std::move(b));
  std::vector<Interval> out;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double lo = std::max(a[i].begin, b[j].begin);
    const double hi = std::min(a[i].end, b[j].end);
    if (lo < hi) out.push_back({lo, hi});
    if (a[i].end < b[j].end) {
      ++i;
    } else {
      ++j;
    }
  }
  return out;
}

double total_length(std::span<const Interval> intervals) {
  double sum = 0.0;
  for (const Interval& iv : intervals) sum += iv.length();
  return sum;
}

std::vector<std::string> Annotation::speakers() const {
  std::vector<std::string> out;
  for (const Segment& seg : segments) out.push_back(seg.speaker);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Interval> Annotation::speaker_intervals(const std::string& speaker) const {
  std::vector<Interval> out;
  for (const Segment& seg : segments) {
    if (seg.speaker == speaker) out.push_back({seg.onset, seg.offset()});
  }
  return merge_intervals(std::move(out));
}

Annotation Annotation::normalized() const {
  Annotation out;
  out.session = session;
  for (const std::string& spk : speakers()) {
    for (const Interval& iv : speaker_intervals(spk)) {
      out.segments.push_back({spk, iv.begin, iv.length()});
    }
  }
  std::sort(out.segments.begin(), out.segments.end(),
            [](const Segment& a, const Segment& b) {
              return a.onset != b.onset ? a.onset < b.onset : a.speaker < b.speaker;
            });
  return out;
}

double Annotation::max_offset() const {
  double m = 0.0;
  for (const Segment& seg : segments) m = std::max(m, seg.offset());
  return m;
}

std::vector<Annotation> rttm_parse(const std::string& text,
                                   const std::string& origin) {
  std::vector<Annotation> out;
  std::map<std::string, std::size_t> index;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (raw.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream fields(raw);
    std::string type, session, channel, onset_s, dur_s, f6, f7, speaker;
    if (!(fields >> type >> session >> channel >> onset_s >> dur_s >> f6 >> f7 >>
          speaker)) {
      raise(ErrorCode::kMalformedFile,
            origin + ":" + std::to_string(line_no) + ": short RTTM line");
    }
    if (type != "SPEAKER") {
      raise(ErrorCode::kMalformedFile,
            origin + ":" + std::to_string(line_no) + ": expected SPEAKER, got '" +
                type + "'");
    }
    char* end = nullptr;
    const double onset = std::strtod(onset_s.c_str(), &end);
    if (end == onset_s.c_str() || *end != '\0') {
      raise(ErrorCode::kMalformedFile,
            origin + ":" + std::to_string(line_no) + ": bad onset '" + onset_s + "'");
    }
    const double dur = std::strtod(dur_s.c_str(), &end);
    if (end == dur_s.c_str() || *end != '\0') {
      raise(ErrorCode::kMalformedFile,
            origin + ":" + std::to_string(line_no) + ": bad duration '" + dur_s + "'");
    }
    if (onset < 0.0 || dur <= 0.0) {
      raise(ErrorCode::kMalformedFile,
            origin + ":" + std::to_string(line_no) +
                ": onset must be >= 0 and duration > 0");
    }
    auto [it, inserted] = index.try_emplace(session, out.size());
    if (inserted) {
      out.emplace_back();
      out.back().session = session;
    }
    out[it->second].segments.push_back({speaker, onset, dur});
  }
  return out;
}

std::vector<Annotation> rttm_read(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    raise(ErrorCode::kMissingFile, "no such file: " + path.string());
  }
  std::ifstream in(path);
  if (!in) raise(ErrorCode::kMissingFile, "cannot open: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return rttm_parse(buf.str(), path.string());
}

std::string rttm_to_string(std::span<const Annotation> annotations) {
  std::string out;
  char line[256];
  for (const Annotation& ann : annotations) {
    for (const Segment& seg : ann.segments) {
      require(seg.onset >= 0.0, ErrorCode::kInvalidArgument,
              "rttm: negative onset for speaker " + seg.speaker);
      require(seg.duration > 0.0, ErrorCode::kInvalidArgument,
              "rttm: nonpositive duration for speaker " + seg.speaker);
      std::snprintf(line, sizeof(line),
                    "SPEAKER %s 1 %.2f %.2f <NA> <NA> %s <NA> <NA>\n",
                    ann.session.c_str(), seg.onset, seg.duration,
                    seg.speaker.c_str());
      out += line;
    }
  }
  return out;
}

void rttm_write(std::span<const Annotation> annotations,
                const std::filesystem::path& path) {
  const std::string text = rttm_to_string(annotations);
  AtomicFileWriter writer(path);
  writer.stream() << text;
  writer.commit();
}

Annotation frames_to_segments(const Matrix& frames, double hop_seconds,
                              std::span<const std::string> speaker_names,
                              const std::string& session) {
  require(hop_seconds > 0.0, ErrorCode::kInvalidArgument,
          "frames_to_segments: hop must be positive");
  require(speaker_names.size() == frames.cols(), ErrorCode::kInvalidArgument,
          "frames_to_segments: name count does not match column count");
  Annotation out;
  out.session = session;
  for (std::size_t col = 0; col < frames.cols(); ++col) {
    std::size_t run_start = 0;
    bool in_run = false;
    for (std::size_t t = 0; t <= frames.rows(); ++t) {
      const bool active = t < frames.rows() && frames(t, col) != 0.0;
      if (active && !in_run) {
        run_start = t;
        in_run = true;
      } else if (!active && in_run) {
        out.segments.push_back({speaker_names[col], run_start * hop_seconds,
                                (t - run_start) * hop_seconds});
        in_run = false;
      }
    }
  }
  std::sort(out.segments.begin(), out.segments.end(),
            [](const Segment& a, const Segment& b) {
              return a.onset != b.onset ? a.onset < b.onset : a.speaker < b.speaker;
            });
  return out;
}

Matrix segments_to_frames(const Annotation& annotation, double hop_seconds,
                          std::span<const std::string> speaker_names,
                          std::size_t n_frames) {
  require(hop_seconds > 0.0, ErrorCode::kInvalidArgument,
          "segments_to_frames: hop must be positive");
  Matrix out(n_frames, speaker_names.size(), 0.0);
  for (std::size_t col = 0; col < speaker_names.size(); ++col) {
    const auto intervals = annotation.speaker_intervals(
        std::string(speaker_names[col]));
    for (const Interval& iv : intervals) {
      for (std::size_t t = 0; t < n_frames; ++t) {
        const double mid = (static_cast<double>(t) + 0.5) * hop_seconds;
        if (mid >= iv.begin && mid < iv.end) out(t, col) = 1.0;
      }
    }
  }
  return out;
}

Annotation postprocess(const Annotation& annotation, double min_on,
                       double max_gap) {
  require(min_on >= 0.0 && max_gap >= 0.0, ErrorCode::kInvalidArgument,
          "postprocess: thresholds must be nonnegative");
  Annotation out;
  out.session = annotation.session;
  for (const std::string& spk : annotation.speakers()) {
    auto intervals = annotation.speaker_intervals(spk);
    // Fill short gaps first so long utterances split by micro-gaps survive
    // the burr removal below.
    std::vector<Interval> filled;
    for (const Interval& iv : intervals) {
      if (!filled.empty() && iv.begin - filled.back().end <= max_gap) {
        filled.back().end = std::max(filled.back().end, iv.end);
      } else {
        filled.push_back(iv);
      }
    }
    for (const Interval& iv : filled) {
      if (iv.length() >= min_on) {
        out.segments.push_back({spk, iv.begin, iv.length()});
      }
    }
  }
  std::sort(out.segments.begin(), out.segments.end(),
            [](const Segment& a, const Segment& b) {
              return a.onset != b.onset ? a.onset < b.onset : a.speaker < b.speaker;
            });
  return out;
}

double overlap_ratio(const Annotation& annotation) {
  require(!annotation.segments.empty(), ErrorCode::kInvalidArgument,
          "overlap_ratio: empty annotation");
  // Sweep over onset/offset events counting active speakers.
  std::vector<std::pair<double, int>> events;
  for (const std::string& spk : annotation.speakers()) {
    for (const Interval& iv : annotation.speaker_intervals(spk)) {
      events.push_back({iv.begin, +1});
      events.push_back({iv.end, -1});
    }
  }
  std::sort(events.begin(), events.end());
  double speech = 0.0, overlapped = 0.0;
  int active = 0;
  double prev = events.front().first;
  for (const auto& [time, delta] : events) {
    const double span = time - prev;
    if (span > 0.0) {
      if (active >= 1) speech += span;
      if (active >= 2) overlapped += span;
    }
    active += delta;
    prev = time;
  }
  require(speech > 0.0, ErrorCode::kInvalidArgument,
          "overlap_ratio: no speech time");
  return overlapped / speech;
}

}  // namespace arraydiar
