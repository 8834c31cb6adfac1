// tests/unit/test_config.cpp

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

#include <string>

#include "arraydiar/config.hpp"
#include "arraydiar/error.hpp"

using namespace arraydiar;

TEST_CASE("config: empty input yields the documented defaults") {
  const PipelineConfig parsed = parse_config("");
  const PipelineConfig defaults;
  CHECK(dump_config(parsed) == dump_config(defaults));
  CHECK(parsed.alpha == 0.25);
  CHECK(parsed.beta == 0.25);
  CHECK(parsed.gamma_lo == 0.8);
  CHECK(parsed.gamma_hi == 1.0);
  CHECK(parsed.theta_n_max_deg == 45.0);
  CHECK(parsed.n_slots == 4);
  CHECK(parsed.chunk_seconds == 4.0);
  CHECK(parsed.collar == 0.25);
  CHECK(parsed.stft.window_len == 400);
  CHECK(parsed.stft.hop == 160);
  CHECK(parsed.stft.fft_size == 512);
}

TEST_CASE("config: overrides are applied") {
  const PipelineConfig c = parse_config("alpha 0.5\ncollar 0\nepochs 3\n");
  CHECK(c.alpha == 0.5);
  CHECK(c.collar == 0.0);
  CHECK(c.epochs == 3);
}

TEST_CASE("config: unknown keys are rejected with their location") {
  try {
    parse_config("alpha 0.5\nwhatsthis 1\n", "cfg");
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMalformedFile);
    const std::string msg = e.what();
    CHECK(msg.find("whatsthis") != std::string::npos);
    CHECK(msg.find("cfg:2") != std::string::npos);
  }
}

TEST_CASE("config: out-of-range values name the key") {
  try {
    parse_config("alpha -1\n");
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("alpha") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("gamma_lo 0.9\ngamma_hi 0.2\n"), Error);
  CHECK_THROWS_AS(parse_config("threshold 1.5\n"), Error);
  CHECK_THROWS_AS(parse_config("stft_window triangle\n"), Error);
  CHECK_THROWS_AS(parse_config("stft_hop 0\n"), Error);
  CHECK_THROWS_AS(parse_config("alpha notanumber\n"), Error);
}

TEST_CASE("config: derived sub-configs mirror the fields") {
  const PipelineConfig c = parse_config("n_slots 3\nband_count 12\ncollar 0.1\n");
  CHECK(c.feature_config().n_slots == 3);
  CHECK(c.feature_config().n_bands == 12);
  CHECK(c.doa_config().grid_step_deg == 1.0);
  CHECK(c.train_config().n_slots == 3);
  const GeometrySpec geom = c.geometry();
  CHECK(geom.geometry.mic_count() == 8);
  CHECK(geom.pairs.size() == 4);
}
