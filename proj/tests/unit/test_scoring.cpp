// tests/unit/test_scoring.cpp

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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "arraydiar/error.hpp"
#include "arraydiar/fusion.hpp"
#include "arraydiar/rng.hpp"
#include "arraydiar/scoring.hpp"
#include "oracles.hpp"

using namespace arraydiar;
using arraydiar::testing::discretized_score;
using arraydiar::testing::random_annotation;

TEST_CASE("der: identical annotations score zero under any collar") {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const Annotation ann = random_annotation(rng, rng.uniform_int(1, 4), 10.0);
    for (const double collar : {0.0, 0.25, 1.0}) {
      const DerReport report = der(ann, ann, collar);
      CHECK(report.der == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(report.jer == doctest::Approx(0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("map_speakers: renamed labels recover the full mapping") {
  Rng rng(42);
  const Annotation ref = random_annotation(rng, 3, 10.0);
  Annotation hyp = ref;
  for (Segment& seg : hyp.segments) seg.speaker = "label_" + seg.speaker;
  const SpeakerMapping mapping = map_speakers(ref, hyp);
  REQUIRE(mapping.size() == ref.speakers().size());
  for (const auto& [r, h] : mapping) CHECK(h == "label_" + r);
  CHECK(der(ref, hyp, 0.0).der == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("map_speakers: a spurious hypothesis speaker stays unmapped") {
  Annotation ref;
  ref.segments = {{"A", 0.0, 5.0}};
  Annotation hyp;
  hyp.segments = {{"X", 0.0, 5.0}, {"ghost", 6.0, 1.0}};
  const SpeakerMapping mapping = map_speakers(ref, hyp);
  REQUIRE(mapping.size() == 1);
  CHECK(mapping[0].first == "A");
  CHECK(mapping[0].second == "X");
}

TEST_CASE("map_speakers: exhaustive optimum on random cases, greedy is a lower bound") {
  Rng rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    const Annotation ref = random_annotation(rng, 3, 8.0, 0.01, "r");
    Annotation hyp = random_annotation(rng, 3, 8.0, 0.01, "r");
    for (Segment& seg : hyp.segments) seg.speaker = "h_" + seg.speaker;

    const SpeakerMapping mapping = map_speakers(ref, hyp);
    double got = 0.0;
    for (const auto& [r, h] : mapping) {
      got += total_length(intersect_intervals(ref.speaker_intervals(r),
                                              hyp.speaker_intervals(h)));
    }

    // Independent exhaustive enumeration over all injective assignments.
    const auto ref_speakers = ref.speakers();
    const auto hyp_speakers = hyp.speakers();
    double best = 0.0;
    std::vector<int> assign(ref_speakers.size(), -1);
    std::vector<bool> used(hyp_speakers.size(), false);
    const std::function<void(std::size_t, double)> search =
        [&](std::size_t i, double value) {
          if (i == ref_speakers.size()) {
            best = std::max(best, value);
            return;
          }
          search(i + 1, value);
          for (std::size_t j = 0; j < hyp_speakers.size(); ++j) {
            if (used[j]) continue;
            used[j] = true;
            search(i + 1, value + total_length(intersect_intervals(
                              ref.speaker_intervals(ref_speakers[i]),
                              hyp.speaker_intervals(hyp_speakers[j]))));
            used[j] = false;
          }
        };
    search(0, 0.0);
    CHECK(got == doctest::Approx(best).epsilon(1e-9));

    // The fusion module's greedy alignment can never beat the optimum.
    const auto greedy = greedy_map(ref, hyp);
    double greedy_total = 0.0;
    for (const auto& [other_label, anchor_label] : greedy) {
      if (anchor_label.rfind("sys", 0) == 0) continue;
      greedy_total += total_length(
          intersect_intervals(ref.speaker_intervals(anchor_label),
                              hyp.speaker_intervals(other_label)));
    }
    CHECK(greedy_total <= best + 1e-9);
  }
}

TEST_CASE("map_speakers: more than eight speakers is rejected") {
  Annotation ref, hyp;
  for (int i = 0; i < 9; ++i) {
    ref.segments.push_back({"r" + std::to_string(i), i * 1.0, 0.5});
  }
  hyp.segments = {{"h", 0.0, 1.0}};
  CHECK_THROWS_AS(map_speakers(ref, hyp), Error);
}

TEST_CASE("der: hand case, 8 of 10 seconds covered") {
  Annotation ref;
  ref.segments = {{"A", 0.0, 10.0}};
  Annotation hyp;
  hyp.segments = {{"A", 0.0, 8.0}};
  const DerReport report = der(ref, hyp, 0.0);
  CHECK(report.miss == doctest::Approx(20.0).epsilon(1e-9));
  CHECK(report.fa == doctest::Approx(0.0));
  CHECK(report.sc == doctest::Approx(0.0));
  CHECK(report.der == doctest::Approx(20.0).epsilon(1e-9));
  CHECK(report.scored_time == doctest::Approx(10.0));
}

TEST_CASE("der: components always sum exactly and respect invariances") {
  Rng rng(44);
  for (int trial = 0; trial < 25; ++trial) {
    const Annotation ref = random_annotation(rng, rng.uniform_int(1, 4), 9.0);
    Annotation hyp = random_annotation(rng, rng.uniform_int(1, 4), 9.0);
    const double collar = rng.bernoulli(0.5) ? 0.25 : 0.0;
    const DerReport report = der(ref, hyp, collar);
    CHECK(report.der == report.fa + report.miss + report.sc);

    // Relabeling the hypothesis changes nothing.
    Annotation renamed = hyp;
    for (Segment& seg : renamed.segments) seg.speaker = "zz_" + seg.speaker;
    CHECK(der(ref, renamed, collar).der == doctest::Approx(report.der).epsilon(1e-12));

    // Translating both in time changes nothing.
    Annotation ref_shift = ref, hyp_shift = hyp;
    for (Segment& seg : ref_shift.segments) seg.onset += 100.0;
    for (Segment& seg : hyp_shift.segments) seg.onset += 100.0;
    CHECK(der(ref_shift, hyp_shift, collar).der ==
          doctest::Approx(report.der).epsilon(1e-9));
  }

  Annotation empty;
  Annotation hyp;
  hyp.segments = {{"A", 0.0, 1.0}};
  CHECK_THROWS_AS(der(empty, hyp, 0.25), Error);
}

TEST_CASE("der and jer: agree with the 1 ms discretized oracle") {
  Rng rng(45);
  for (int trial = 0; trial < 40; ++trial) {
    const Annotation ref = random_annotation(rng, rng.uniform_int(1, 4), 8.0);
    const Annotation hyp = random_annotation(rng, rng.uniform_int(1, 4), 8.0);
    const double collar = trial % 2 == 0 ? 0.25 : 0.0;
    const DerReport exact = der(ref, hyp, collar);
    const auto sampled = discretized_score(ref, hyp, collar);
    CHECK(std::fabs(exact.der - sampled.der) < 0.1);
    CHECK(std::fabs(exact.miss - sampled.miss) < 0.1);
    CHECK(std::fabs(exact.fa - sampled.fa) < 0.1);
    CHECK(std::fabs(exact.sc - sampled.sc) < 0.1);
    CHECK(std::fabs(exact.jer - sampled.jer) < 0.1);
  }
}

TEST_CASE("jer: endpoint cases") {
  Annotation ref;
  ref.segments = {{"A", 0.0, 4.0}, {"B", 5.0, 2.0}};

  CHECK(jer(ref, ref, map_speakers(ref, ref)) == doctest::Approx(0.0));

  Annotation far;
  far.segments = {{"A", 20.0, 4.0}, {"B", 30.0, 2.0}};
  CHECK(jer(ref, far, map_speakers(ref, far)) == doctest::Approx(100.0));
}

TEST_CASE("score_sessions: aggregates by reference speaker time") {
  Annotation ref1;
  ref1.session = "s1";
  ref1.segments = {{"A", 0.0, 10.0}};
  Annotation hyp1 = ref1;
  Annotation ref2;
  ref2.session = "s2";
  ref2.segments = {{"A", 0.0, 10.0}};
  Annotation hyp2;
  hyp2.session = "s2";
  hyp2.segments = {{"A", 0.0, 5.0}};

  const std::vector<Annotation> refs = {ref1, ref2};
  const std::vector<Annotation> hyps = {hyp1, hyp2};
  const SessionScores scores = score_sessions(refs, hyps, 0.0);
  REQUIRE(scores.sessions.size() == 2);
  CHECK(scores.sessions[0].second.der == doctest::Approx(0.0));
  CHECK(scores.sessions[1].second.der == doctest::Approx(50.0));
  CHECK(scores.overall.der == doctest::Approx(25.0));
  CHECK(scores.overall.scored_time == doctest::Approx(20.0));

  const std::string text = format_report(scores);
  CHECK(text.find("OVERALL") != std::string::npos);
  CHECK(text.find("der 25.0000") != std::string::npos);
}
