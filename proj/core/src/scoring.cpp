// core/src/scoring.cpp

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

#include "arraydiar/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "arraydiar/error.hpp"

namespace arraydiar {

namespace {

constexpr std::size_t kMaxSpeakers = 8;

struct SessionSeconds {
  double miss_s = 0.0;
  double fa_s = 0.0;
  double sc_s = 0.0;
  double total_ref_s = 0.0;
  std::vector<double> jer_per_speaker;  // one entry per reference speaker
  SpeakerMapping mapping;
};

double overlap_seconds(const std::vector<Interval>& a,
                       const std::vector<Interval>& b) {
  return total_length(intersect_intervals(a, b));
}

SessionSeconds score_session(const Annotation& ref_in, const Annotation& hyp_in,
                             double collar) {
  require(!ref_in.segments.empty(), ErrorCode::kInvalidArgument,
          "der: empty reference annotation");
  require(collar >= 0.0, ErrorCode::kInvalidArgument,
          "der: collar must be nonnegative");

  const Annotation ref = ref_in.normalized();
  const Annotation hyp = hyp_in.normalized();

  const auto ref_speakers = ref.speakers();
  const auto hyp_speakers = hyp.speakers();

  std::vector<std::vector<Interval>> ref_iv, hyp_iv;
  for (const auto& s : ref_speakers) ref_iv.push_back(ref.speaker_intervals(s));
  for (const auto& s : hyp_speakers) hyp_iv.push_back(hyp.speaker_intervals(s));

  SessionSeconds out;
  out.mapping = map_speakers(ref, hyp);

  std::vector<int> ref_to_hyp(ref_speakers.size(), -1);
  for (const auto& [r, h] : out.mapping) {
    const auto ri = std::find(ref_speakers.begin(), ref_speakers.end(), r);
    const auto hi = std::find(hyp_speakers.begin(), hyp_speakers.end(), h);
    if (ri != ref_speakers.end() && hi != hyp_speakers.end()) {
      ref_to_hyp[static_cast<std::size_t>(ri - ref_speakers.begin())] =
          static_cast<int>(hi - hyp_speakers.begin());
    }
  }

  // Scoring timeline: boundaries of every speaker interval plus the edges of
  // the collar zones around reference boundaries. Each elementary region is
  // then uniformly scored or excluded.
  std::vector<Interval> excluded;
  if (collar > 0.0) {
    for (const auto& ivs : ref_iv) {
      for (const Interval& iv : ivs) {
        excluded.push_back({iv.begin - collar, iv.begin + collar});
        excluded.push_back({iv.end - collar, iv.end + collar});
      }
    }
    excluded = merge_intervals(std::move(excluded));
  }

  std::vector<double> cuts;
  for (const auto& ivs : ref_iv) {
    for (const Interval& iv : ivs) {
      cuts.push_back(iv.begin);
      cuts.push_back(iv.end);
    }
  }
  for (const auto& ivs : hyp_iv) {
    for (const Interval& iv : ivs) {
      cuts.push_back(iv.begin);
      cuts.push_back(iv.end);
    }
  }
  for (const Interval& iv : excluded) {
    cuts.push_back(iv.begin);
    cuts.push_back(iv.end);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto active_in = [](const std::vector<Interval>& ivs, double lo, double hi) {
    for (const Interval& iv : ivs) {
      if (iv.begin <= lo && iv.end >= hi) return true;
    }
    return false;
  };

  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double lo = cuts[k];
    const double hi = cuts[k + 1];
    if (hi - lo <= 0.0) continue;
    if (active_in(excluded, lo, hi)) continue;

    std::vector<std::size_t> r_active, h_active;
    for (std::size_t i = 0; i < ref_iv.size(); ++i) {
      if (active_in(ref_iv[i], lo, hi)) r_active.push_back(i);
    }
    for (std::size_t j = 0; j < hyp_iv.size(); ++j) {
      if (active_in(hyp_iv[j], lo, hi)) h_active.push_back(j);
    }
    if (r_active.empty() && h_active.empty()) continue;

    const double span = hi - lo;
    const std::size_t n_ref = r_active.size();
    const std::size_t n_hyp = h_active.size();
    std::size_t n_correct = 0;
    for (const std::size_t i : r_active) {
      const int j = ref_to_hyp[i];
      if (j >= 0 && std::find(h_active.begin(), h_active.end(),
                              static_cast<std::size_t>(j)) != h_active.end()) {
        ++n_correct;
      }
    }
    out.total_ref_s += span * static_cast<double>(n_ref);
    if (n_ref > n_hyp) out.miss_s += span * static_cast<double>(n_ref - n_hyp);
    if (n_hyp > n_ref) out.fa_s += span * static_cast<double>(n_hyp - n_ref);
    out.sc_s += span * static_cast<double>(std::min(n_ref, n_hyp) - n_correct);
  }

  // JER per reference speaker on the full (collar-free) timeline.
  for (std::size_t i = 0; i < ref_speakers.size(); ++i) {
    const int j = ref_to_hyp[i];
    if (j < 0) {
      out.jer_per_speaker.push_back(100.0);
      continue;
    }
    const double inter = overlap_seconds(ref_iv[i], hyp_iv[static_cast<std::size_t>(j)]);
    const double uni = total_length(ref_iv[i]) +
                       total_length(hyp_iv[static_cast<std::size_t>(j)]) - inter;
    out.jer_per_speaker.push_back(uni > 0.0 ? (1.0 - inter / uni) * 100.0 : 0.0);
  }
  return out;
}

DerReport to_report(const SessionSeconds& s) {
  DerReport report;
  report.speaker_mapping = s.mapping;
  report.scored_time = s.total_ref_s;
  if (s.total_ref_s > 0.0) {
    report.fa = 100.0 * s.fa_s / s.total_ref_s;
    report.miss = 100.0 * s.miss_s / s.total_ref_s;
    report.sc = 100.0 * s.sc_s / s.total_ref_s;
  }
  report.der = report.fa + report.miss + report.sc;
  double jer_sum = 0.0;
  for (const double v : s.jer_per_speaker) jer_sum += v;
  report.jer = s.jer_per_speaker.empty()
                   ? 0.0
                   : jer_sum / static_cast<double>(s.jer_per_speaker.size());
  return report;
}

}  // namespace

SpeakerMapping map_speakers(const Annotation& ref, const Annotation& hyp) {
  const auto ref_speakers = ref.speakers();
  const auto hyp_speakers = hyp.speakers();
  require(ref_speakers.size() <= kMaxSpeakers &&
              hyp_speakers.size() <= kMaxSpeakers,
          ErrorCode::kInvalidArgument,
          "map_speakers: more than 8 speakers on one side");

  const std::size_t n_ref = ref_speakers.size();
  const std::size_t n_hyp = hyp_speakers.size();
  std::vector<std::vector<double>> overlap(n_ref, std::vector<double>(n_hyp, 0.0));
  for (std::size_t i = 0; i < n_ref; ++i) {
    const auto ri = ref.speaker_intervals(ref_speakers[i]);
    for (std::size_t j = 0; j < n_hyp; ++j) {
      overlap[i][j] = overlap_seconds(ri, hyp.speaker_intervals(hyp_speakers[j]));
    }
  }

  // Exact assignment by DP over (ref index, used-hypothesis bitmask).
  const std::size_t n_masks = static_cast<std::size_t>(1) << n_hyp;
  const double kNegInf = -1.0;
  std::vector<std::vector<double>> best(n_ref + 1,
                                        std::vector<double>(n_masks, kNegInf));
  std::vector<std::vector<int>> choice(n_ref + 1, std::vector<int>(n_masks, -2));
  best[0][0] = 0.0;
  for (std::size_t i = 0; i < n_ref; ++i) {
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
      if (best[i][mask] < 0.0) continue;
      // Leave ref speaker i unmapped.
      if (best[i][mask] > best[i + 1][mask]) {
        best[i + 1][mask] = best[i][mask];
        choice[i + 1][mask] = -1;
      }
      for (std::size_t j = 0; j < n_hyp; ++j) {
        if (mask & (static_cast<std::size_t>(1) << j)) continue;
        if (overlap[i][j] <= 0.0) continue;
        const std::size_t next = mask | (static_cast<std::size_t>(1) << j);
        const double value = best[i][mask] + overlap[i][j];
        if (value > best[i + 1][next]) {
          best[i + 1][next] = value;
          choice[i + 1][next] = static_cast<int>(j);
        }
      }
    }
  }

  std::size_t arg_mask = 0;
  for (std::size_t mask = 1; mask < n_masks; ++mask) {
    if (best[n_ref][mask] > best[n_ref][arg_mask]) arg_mask = mask;
  }

  SpeakerMapping mapping;
  std::size_t mask = arg_mask;
  for (std::size_t i = n_ref; i > 0; --i) {
    const int j = choice[i][mask];
    if (j >= 0) {
      mapping.push_back({ref_speakers[i - 1],
                         hyp_speakers[static_cast<std::size_t>(j)]});
      mask &= ~(static_cast<std::size_t>(1) << j);
    }
  }
  std::reverse(mapping.begin(), mapping.end());
  return mapping;
}

DerReport der(const Annotation& ref, const Annotation& hyp, double collar) {
  return to_report(score_session(ref, hyp, collar));
}

double jer(const Annotation& ref_in, const Annotation& hyp_in,
           const SpeakerMapping& mapping) {
  const Annotation ref = ref_in.normalized();
  const Annotation hyp = hyp_in.normalized();
  const auto ref_speakers = ref.speakers();
  if (ref_speakers.empty()) return 0.0;

  double sum = 0.0;
  for (const auto& spk : ref_speakers) {
    const auto it = std::find_if(mapping.begin(), mapping.end(),
                                 [&](const auto& p) { return p.first == spk; });
    if (it == mapping.end()) {
      sum += 100.0;
      continue;
    }
    const auto ri = ref.speaker_intervals(spk);
    const auto hi = hyp.speaker_intervals(it->second);
    const double inter = overlap_seconds(ri, hi);
    const double uni = total_length(ri) + total_length(hi) - inter;
    sum += uni > 0.0 ? (1.0 - inter / uni) * 100.0 : 0.0;
  }
  return sum / static_cast<double>(ref_speakers.size());
}

SessionScores score_sessions(std::span<const Annotation> refs,
                             std::span<const Annotation> hyps, double collar) {
  require(!refs.empty(), ErrorCode::kInvalidArgument,
          "score_sessions: no reference sessions");
  SessionScores scores;
  SessionSeconds aggregate;
  for (const Annotation& ref : refs) {
    Annotation hyp;
    hyp.session = ref.session;
    for (const Annotation& candidate : hyps) {
      if (candidate.session == ref.session) {
        hyp = candidate;
        break;
      }
    }
    const SessionSeconds s = score_session(ref, hyp, collar);
    scores.sessions.push_back({ref.session, to_report(s)});
    aggregate.miss_s += s.miss_s;
    aggregate.fa_s += s.fa_s;
    aggregate.sc_s += s.sc_s;
    aggregate.total_ref_s += s.total_ref_s;
    aggregate.jer_per_speaker.insert(aggregate.jer_per_speaker.end(),
                                     s.jer_per_speaker.begin(),
                                     s.jer_per_speaker.end());
  }
  scores.overall = to_report(aggregate);
  return scores;
}

std::string format_report(const SessionScores& scores) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-20s %10s %7s %7s %7s %7s %7s\n", "session",
                "scored_s", "FA", "MISS", "SC", "DER", "JER");
  out += line;
  auto add_row = [&](const std::string& name, const DerReport& r) {
    std::snprintf(line, sizeof(line),
                  "%-20s %10.2f %7.2f %7.2f %7.2f %7.2f %7.2f\n", name.c_str(),
                  r.scored_time, r.fa, r.miss, r.sc, r.der, r.jer);
    out += line;
  };
  for (const auto& [name, report] : scores.sessions) add_row(name, report);
  add_row("OVERALL", scores.overall);

  const DerReport& o = scores.overall;
  std::snprintf(line, sizeof(line),
                "fa %.4f\nmiss %.4f\nsc %.4f\nder %.4f\njer %.4f\nscored_time %.4f\n",
                o.fa, o.miss, o.sc, o.der, o.jer, o.scored_time);
  out += line;
  return out;
}

}  // namespace arraydiar
