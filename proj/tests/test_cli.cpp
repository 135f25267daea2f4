/* Copyright 2026 The mtctc Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include "mtctc/checkpoint.hpp"
#include "mtctc/cli.hpp"
#include "mtctc/error.hpp"
#include "mtctc/manifest.hpp"
#include "mtctc/metrics.hpp"
#include "mtctc/train.hpp"
#include "test_util.hpp"

using namespace mtctc;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult RunCli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::Run(args, out, err);
  return {code, out.str(), err.str()};
}

const std::vector<std::string> kSmallModel = {"--conv", "2,4", "--projection", "8",
                                              "--hidden", "8"};

std::vector<std::string> TrainArgs(const fs::path& data, const fs::path& out,
                                   const std::string& mode, int epochs) {
  std::vector<std::string> a{"train", "--data", data.string(), "--out", out.string(),
                             "--mode", mode, "--epochs", std::to_string(epochs),
                             "--seed", "3"};
  a.insert(a.end(), kSmallModel.begin(), kSmallModel.end());
  return a;
}

// Words plus a small dataset under `dir/ds`.
fs::path MakeDataset(const fs::path& dir) {
  const auto words = dir / "words.txt";
  REQUIRE(RunCli({"gen-words", "--count", "10", "--min-len", "2", "--max-len", "3",
                  "--seed", "4", "--out", words.string()})
              .code == 0);
  const auto ds = dir / "ds";
  const auto r = RunCli({"gen-data", "--words", words.string(), "--writers", "2,1,1",
                         "--word-counts", "6,2,2", "--max-len", "3", "--seed", "7",
                         "--out", ds.string()});
  INFO(r.err);
  REQUIRE(r.code == 0);
  return ds;
}

size_t CountLines(const std::string& s) {
  return static_cast<size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("writer spec parsing") {
  const auto counts = cli::ParseWriterSpec("3,1,2");
  CHECK(counts[0] == std::vector<int>{0, 1, 2});
  CHECK(counts[2] == std::vector<int>{4, 5});
  const auto ids = cli::ParseWriterSpec("0-2,7:3:4,5");
  CHECK(ids[0] == std::vector<int>{0, 1, 2, 7});
  CHECK(ids[1] == std::vector<int>{3});
  CHECK(ids[2] == std::vector<int>{4, 5});
  CHECK_THROWS_AS(cli::ParseWriterSpec("1,2"), Error);
  CHECK_THROWS_AS(cli::ParseWriterSpec("0:1"), Error);
}

TEST_CASE("gen-data writes a writer-disjoint dataset") {
  const auto dir = testing::ScratchDir("cli_gen");
  const auto words = dir / "words.txt";
  REQUIRE(RunCli({"gen-words", "--count", "20", "--max-len", "4", "--seed", "1", "--out",
                  words.string()})
              .code == 0);
  const auto r = RunCli({"gen-data", "--words", words.string(), "--writers", "10,2,2",
                         "--max-len", "4", "--seed", "7", "--out", (dir / "ds").string()});
  REQUIRE(r.code == 0);
  const DatasetManifest m = LoadManifest(dir / "ds" / kManifestFile);
  CHECK(m.split("train").size() == 16 * 10);
  CHECK(m.split("validation").size() == 2 * 2);
  std::array<std::set<int>, 3> w;
  for (int s = 0; s < 3; ++s)
    for (const auto& rec : m.splits[s]) w[s].insert(rec.writer_id);
  CHECK(w[0].size() == 10);
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b)
      for (int id : w[a]) CHECK(w[b].count(id) == 0);
}

TEST_CASE("gen-data with overlapping writers fails without output") {
  const auto dir = testing::ScratchDir("cli_overlap");
  const auto words = dir / "words.txt";
  REQUIRE(RunCli({"gen-words", "--count", "10", "--max-len", "4", "--out", words.string()}).code ==
          0);
  const auto r = RunCli({"gen-data", "--words", words.string(), "--writers", "0,1:1:2",
                         "--max-len", "4", "--out", (dir / "ds").string()});
  CHECK(r.code != 0);
  CHECK_FALSE(r.err.empty());
  CHECK_FALSE(fs::exists(dir / "ds"));
  CHECK_FALSE(fs::exists(dir / "ds.staging"));
}

TEST_CASE("dry run reproduces the reference corpus counts") {
  const auto r = RunCli({"gen-data", "--writers", "100,10,10", "--word-counts", "2561,320,320",
                         "--dry-run"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("train: 2561 words x 100 writers = 256100 samples") != std::string::npos);
  CHECK(r.out.find("validation: 320 words x 10 writers = 3200 samples") != std::string::npos);
  CHECK(r.out.find("test: 320 words x 10 writers = 3200 samples") != std::string::npos);
}

TEST_CASE("usage errors") {
  CHECK(RunCli({}).code != 0);
  CHECK(RunCli({"train"}).code == 2);
  CHECK(RunCli({"frobnicate"}).code == 2);
  CHECK(RunCli({"gen-data", "--writers", "1,1,1"}).code == 1);
  CHECK(RunCli({"--help"}).code == 0);
}

TEST_CASE("train, eval and compare") {
  const auto dir = testing::ScratchDir("cli_train");
  const auto ds = MakeDataset(dir);

  SUBCASE("epochs=0 writes an initial checkpoint and an empty curve") {
    const auto out = dir / "zero";
    REQUIRE(RunCli(TrainArgs(ds, out, "proposed", 0)).code == 0);
    CHECK(ReadFileBytes(out / "curves.csv") == std::string(kCurvesHeader) + "\n");
    const auto m = LoadCheckpoint<float>(out / "checkpoint_final.ckpt");
    CHECK(m.step == 0);
    CHECK(fs::exists(out / "checkpoint_best.ckpt"));
    CHECK_FALSE(fs::exists(out / "train.lock"));

    // An untrained model transcribes almost nothing correctly.
    REQUIRE(RunCli({"eval", "--checkpoint", (out / "checkpoint_final.ckpt").string(), "--data",
                    ds.string(), "--out", out.string()})
                .code == 0);
    const EvalReport r = ParseReport(ReadFileBytes(out / "eval_test.tsv"));
    CHECK(r.wer >= 50.0);
  }

  SUBCASE("curves, resume, eval determinism, compare") {
    const auto out = dir / "run";
    REQUIRE(RunCli(TrainArgs(ds, out, "proposed", 2)).code == 0);
    const std::string curves = ReadFileBytes(out / "curves.csv");
    CHECK(CountLines(curves) == 3);
    const auto rows = ParseCurves(curves);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].epoch == 2);
    CHECK(rows[0].train_row_loss.has_value());
    const auto final_model = LoadCheckpoint<float>(out / "checkpoint_final.ckpt");
    CHECK(final_model.step == 24);

    auto resume = TrainArgs(ds, out, "proposed", 1);
    resume.push_back("--resume");
    resume.push_back((out / "checkpoint_final.ckpt").string());
    REQUIRE(RunCli(resume).code == 0);
    const auto resumed = ParseCurves(ReadFileBytes(out / "curves.csv"));
    REQUIRE(resumed.size() == 3);
    CHECK(resumed[2].epoch == 3);
    CHECK(LoadCheckpoint<float>(out / "checkpoint_final.ckpt").step == 36);

    // Resuming a proposed checkpoint as baseline is rejected.
    auto wrong = TrainArgs(ds, dir / "wrong", "baseline", 1);
    wrong.push_back("--resume");
    wrong.push_back((out / "checkpoint_final.ckpt").string());
    CHECK(RunCli(wrong).code != 0);

    const std::vector<std::string> eval{"eval", "--checkpoint",
                                        (out / "checkpoint_best.ckpt").string(), "--data",
                                        ds.string(), "--split", "validation", "--out"};
    auto e1 = eval, e2 = eval;
    e1.push_back((dir / "e1").string());
    e2.push_back((dir / "e2").string());
    REQUIRE(RunCli(e1).code == 0);
    REQUIRE(RunCli(e2).code == 0);
    const std::string r1 = ReadFileBytes(dir / "e1" / "eval_validation.tsv");
    CHECK(r1 == ReadFileBytes(dir / "e2" / "eval_validation.tsv"));
    CHECK(ParseReport(r1).num_words == 2);

    const auto rep = (dir / "e1" / "eval_validation.tsv").string();
    const auto c = RunCli({"compare", "--baseline", rep, "--proposed", rep, "--out",
                           (dir / "cmp").string()});
    REQUIRE(c.code == 0);
    const std::string csv = ReadFileBytes(dir / "cmp" / "comparison.csv");
    CHECK(csv.find("delta,,,+0.00,+0.00") != std::string::npos);
    CHECK(fs::exists(dir / "cmp" / "comparison.txt"));

    CHECK(RunCli({"compare", "--baseline", (dir / "missing.tsv").string(), "--proposed", rep,
                  "--out", (dir / "cmp2").string()})
              .code != 0);
  }

  SUBCASE("baseline mode has an empty row-loss column") {
    const auto out = dir / "base";
    REQUIRE(RunCli(TrainArgs(ds, out, "baseline", 1)).code == 0);
    const auto rows = ParseCurves(ReadFileBytes(out / "curves.csv"));
    REQUIRE(rows.size() == 1);
    CHECK_FALSE(rows[0].train_row_loss.has_value());
    auto bad = TrainArgs(ds, dir / "base2", "baseline", 1);
    bad.push_back("--row-weight");
    bad.push_back("0.5");
    CHECK(RunCli(bad).code != 0);
  }

  SUBCASE("a held lock refuses a second run") {
    const auto out = dir / "locked";
    fs::create_directories(out);
    WriteFileBytes(out / "train.lock", "other\n");
    const auto r = RunCli(TrainArgs(ds, out, "proposed", 1));
    CHECK(r.code != 0);
    CHECK(r.err.find("lock") != std::string::npos);
    CHECK_FALSE(fs::exists(out / "curves.csv"));
  }

  SUBCASE("config file") {
    const auto cfg = dir / "train.cfg";
    WriteFileBytes(cfg, "[train]\nepochs=1\nmode=baseline\nseed=3\n");
    auto args = std::vector<std::string>{"--config", cfg.string(), "train", "--data",
                                         ds.string(), "--out", (dir / "cfgrun").string()};
    args.insert(args.end(), kSmallModel.begin(), kSmallModel.end());
    const auto r = RunCli(args);
    INFO(r.err);
    REQUIRE(r.code == 0);
    const auto rows = ParseCurves(ReadFileBytes(dir / "cfgrun" / "curves.csv"));
    CHECK(rows.size() == 1);
    CHECK_FALSE(rows[0].train_row_loss.has_value());
  }
}

}  // TEST_SUITE
