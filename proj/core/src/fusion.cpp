// core/src/fusion.cpp

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

#include "arraydiar/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "arraydiar/error.hpp"

namespace arraydiar {

std::map<std::string, std::string> greedy_map(const Annotation& anchor,
                                              const Annotation& other,
                                              int other_index) {
  const auto anchor_speakers = anchor.speakers();
  const auto other_speakers = other.speakers();

  struct Cell {
    double overlap;
    std::string anchor_label;
    std::string other_label;
  };
  std::vector<Cell> cells;
  for (const auto& a : anchor_speakers) {
    const auto ai = anchor.speaker_intervals(a);
    for (const auto& o : other_speakers) {
      const double ov = total_length(
          intersect_intervals(ai, other.speaker_intervals(o)));
      if (ov > 0.0) cells.push_back({ov, a, o});
    }
  }
  // Deterministic order: overlap descending, then label pair.
  std::sort(cells.begin(), cells.end(), [](const Cell& x, const Cell& y) {
    if (x.overlap != y.overlap) return x.overlap > y.overlap;
    if (x.anchor_label != y.anchor_label) return x.anchor_label < y.anchor_label;
    return x.other_label < y.other_label;
  });

  std::map<std::string, std::string> mapping;  // other label -> fused label
  std::set<std::string> used_anchor;
  for (const Cell& cell : cells) {
    if (mapping.count(cell.other_label) || used_anchor.count(cell.anchor_label)) {
      continue;
    }
    mapping[cell.other_label] = cell.anchor_label;
    used_anchor.insert(cell.anchor_label);
  }
  for (const auto& o : other_speakers) {
    if (!mapping.count(o)) {
      mapping[o] = "sys" + std::to_string(other_index) + ":" + o;
    }
  }
  return mapping;
}

Annotation fuse(std::span<const Annotation> hypotheses,
                std::span<const double> weights) {
  require(!hypotheses.empty(), ErrorCode::kInvalidArgument,
          "fuse: no hypotheses");
  std::vector<double> w(weights.begin(), weights.end());
  if (w.empty()) w.assign(hypotheses.size(), 1.0);
  require(w.size() == hypotheses.size(), ErrorCode::kInvalidArgument,
          "fuse: weight count does not match hypothesis count");
  for (const double v : w) {
    require(v > 0.0, ErrorCode::kInvalidArgument, "fuse: weights must be positive");
  }

  // Map every hypothesis into the label space of the first.
  std::vector<Annotation> mapped;
  mapped.push_back(hypotheses[0].normalized());
  for (std::size_t h = 1; h < hypotheses.size(); ++h) {
    const auto label_map =
        greedy_map(hypotheses[0], hypotheses[h], static_cast<int>(h));
    Annotation remapped;
    remapped.session = hypotheses[h].session;
    for (const Segment& seg : hypotheses[h].segments) {
      remapped.segments.push_back(
          {label_map.at(seg.speaker), seg.onset, seg.duration});
    }
    mapped.push_back(remapped.normalized());
  }

  const double weight_sum =
      std::accumulate(w.begin(), w.end(), 0.0, std::plus<double>());

  // All labels and per-hypothesis interval lookup.
  std::set<std::string> label_set;
  for (const Annotation& ann : mapped) {
    for (const auto& s : ann.speakers()) label_set.insert(s);
  }
  const std::vector<std::string> labels(label_set.begin(), label_set.end());

  std::vector<std::vector<std::vector<Interval>>> intervals(mapped.size());
  for (std::size_t h = 0; h < mapped.size(); ++h) {
    for (const auto& label : labels) {
      intervals[h].push_back(mapped[h].speaker_intervals(label));
    }
  }

  std::vector<double> cuts;
  for (const auto& per_hyp : intervals) {
    for (const auto& ivs : per_hyp) {
      for (const Interval& iv : ivs) {
        cuts.push_back(iv.begin);
        cuts.push_back(iv.end);
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto active_in = [](const std::vector<Interval>& ivs, double lo, double hi) {
    for (const Interval& iv : ivs) {
      if (iv.begin <= lo && iv.end >= hi) return true;
    }
    return false;
  };

  Annotation fused;
  fused.session = hypotheses[0].session;
  std::vector<std::vector<Interval>> selected(labels.size());

  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double lo = cuts[k];
    const double hi = cuts[k + 1];
    if (hi - lo <= 0.0) continue;

    double weighted_count = 0.0;
    std::vector<double> votes(labels.size(), 0.0);
    for (std::size_t h = 0; h < mapped.size(); ++h) {
      int count = 0;
      for (std::size_t l = 0; l < labels.size(); ++l) {
        if (active_in(intervals[h][l], lo, hi)) {
          votes[l] += w[h];
          ++count;
        }
      }
      weighted_count += w[h] * count;
    }
    const int k_speakers =
        static_cast<int>(std::floor(weighted_count / weight_sum + 0.5));
    if (k_speakers <= 0) continue;

    // Top-voted labels; ties go to the lexicographically smaller label,
    // which is the natural order of `labels`.
    std::vector<std::size_t> order;
    for (std::size_t l = 0; l < labels.size(); ++l) {
      if (votes[l] > 0.0) order.push_back(l);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return votes[a] > votes[b];
    });
    const std::size_t take =
        std::min<std::size_t>(static_cast<std::size_t>(k_speakers), order.size());
    for (std::size_t i = 0; i < take; ++i) {
      selected[order[i]].push_back({lo, hi});
    }
  }

  for (std::size_t l = 0; l < labels.size(); ++l) {
    for (const Interval& iv : merge_intervals(std::move(selected[l]))) {
      fused.segments.push_back({labels[l], iv.begin, iv.length()});
    }
  }
  return fused.normalized();
}

}  // namespace arraydiar
