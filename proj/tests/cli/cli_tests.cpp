// tests/cli/cli_tests.cpp

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

// End-to-end checks of the installed command-line surface. Every call runs
// the real binary in a subprocess and inspects exit codes and outputs.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string output;
};

fs::path work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "arraydiar_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path out_file = work_dir() / ("out_" + std::to_string(counter++) + ".txt");
  const std::string command = std::string(ARRAYDIAR_CLI_PATH) + " " + args +
                              " > " + out_file.string() + " 2>&1";
  const int status = std::system(command.c_str());
  RunResult result;
  if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  std::ifstream in(out_file);
  std::ostringstream buf;
  buf << in.rdbuf();
  result.output = buf.str();
  return result;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

fs::path golden(const std::string& name) {
  return fs::path(ARRAYDIAR_GOLDEN_DIR) / name;
}

}  // namespace

TEST_CASE("cli: --help matches the golden transcript") {
  const RunResult result = run_cli("--help");
  CHECK(result.exit_code == 0);
  CHECK(result.output == read_file(golden("help.txt")));
}

TEST_CASE("cli: print-config echoes the documented defaults") {
  const RunResult result = run_cli("print-config");
  CHECK(result.exit_code == 0);
  CHECK(result.output == read_file(golden("print_config.txt")));
}

TEST_CASE("cli: usage and data errors use distinct exit codes") {
  CHECK(run_cli("no-such-subcommand").exit_code == 1);
  CHECK(run_cli("score --ref only").exit_code == 1);  // missing --hyp
  const RunResult missing =
      run_cli("score --ref /nonexistent.rttm --hyp /nonexistent.rttm");
  CHECK(missing.exit_code == 2);

  const fs::path bad_cfg = work_dir() / "bad.cfg";
  write_file(bad_cfg, "alpha -1\n");
  const RunResult bad = run_cli("--config " + bad_cfg.string() + " print-config");
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("alpha") != std::string::npos);
}

TEST_CASE("cli: scoring a reference against itself reports zero error") {
  const fs::path rttm = work_dir() / "self.rttm";
  write_file(rttm,
             "SPEAKER s1 1 0.00 5.00 <NA> <NA> A <NA> <NA>\n"
             "SPEAKER s1 1 3.00 4.00 <NA> <NA> B <NA> <NA>\n");
  const RunResult result = run_cli("score --ref " + rttm.string() + " --hyp " +
                                   rttm.string() + " --collar 0.25");
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("der 0.0000") != std::string::npos);
}

TEST_CASE("cli: simulate is deterministic and drives the full pipeline") {
  const fs::path dir = work_dir();
  const fs::path scene_cfg = dir / "scene.cfg";
  write_file(scene_cfg,
             "n_speakers 2\nduration 6\noverlap_ratio 0.3\nsnr_db 25\n"
             "min_separation 60\n");

  // Determinism: two runs, byte-identical artifacts.
  const RunResult a = run_cli("simulate --scene " + scene_cfg.string() +
                              " --seed 7 --count 2 --out-dir " +
                              (dir / "sim_a").string());
  const RunResult b = run_cli("simulate --scene " + scene_cfg.string() +
                              " --seed 7 --count 2 --out-dir " +
                              (dir / "sim_b").string());
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  for (const std::string name :
       {"scene_0000.wav", "scene_0000.rttm", "scene_0000.prof",
        "scene_0001.wav", "scene_0001.rttm", "scene_0001.prof"}) {
    CHECK(read_file(dir / "sim_a" / name) == read_file(dir / "sim_b" / name));
  }

  // Training corpus.
  const fs::path scenes = dir / "scenes";
  REQUIRE(run_cli("simulate --scene " + scene_cfg.string() +
                  " --seed 11 --count 4 --jobs 2 --out-dir " + scenes.string())
              .exit_code == 0);

  const fs::path train_cfg = dir / "train.cfg";
  write_file(train_cfg,
             "epochs 2\nbatch_size 4\nchunk_seconds 2\nlearning_rate 0.001\n"
             "hidden 8\nslot_embed 6\nval_fraction 0\n");

  const fs::path ckpt = dir / "model.ckpt";
  const RunResult trained =
      run_cli("--config " + train_cfg.string() + " train --scenes " +
              scenes.string() + " --out " + ckpt.string() + " --seed 5");
  REQUIRE(trained.exit_code == 0);
  CHECK(trained.output.find("best epoch") != std::string::npos);

  // Estimated directions feed extraction; embeddings come from the truth
  // profiles, as the embedding extractor lives outside this toolkit.
  const fs::path wav = scenes / "scene_0000.wav";
  const fs::path rttm = scenes / "scene_0000.rttm";
  const fs::path prof = scenes / "scene_0000.prof";
  const fs::path est = dir / "est.prof";
  const RunResult doa =
      run_cli("estimate-doa --wav " + wav.string() + " --rttm " + rttm.string() +
              " --profiles-in " + prof.string() + " --out " + est.string());
  REQUIRE(doa.exit_code == 0);
  CHECK(doa.output.find("theta") != std::string::npos);

  const fs::path feat = dir / "scene0.feat";
  REQUIRE(run_cli("extract --wav " + wav.string() + " --profiles " +
                  est.string() + " --out " + feat.string())
              .exit_code == 0);

  const fs::path hyp = dir / "hyp.rttm";
  REQUIRE(run_cli("--config " + train_cfg.string() + " infer --model " +
                  ckpt.string() + " --features " + feat.string() + " --out " +
                  hyp.string())
              .exit_code == 0);

  const RunResult scored =
      run_cli("score --ref " + rttm.string() + " --hyp " + hyp.string());
  REQUIRE(scored.exit_code == 0);
  CHECK(scored.output.find("OVERALL") != std::string::npos);

  // Fusing three copies of one hypothesis reproduces it.
  const fs::path fused = dir / "fused.rttm";
  REQUIRE(run_cli("fuse --out " + fused.string() + " " + hyp.string() + " " +
                  hyp.string() + " " + hyp.string())
              .exit_code == 0);
  const RunResult fused_score =
      run_cli("score --ref " + hyp.string() + " --hyp " + fused.string() +
              " --collar 0");
  REQUIRE(fused_score.exit_code == 0);
  CHECK(fused_score.output.find("der 0.0000") != std::string::npos);
}
