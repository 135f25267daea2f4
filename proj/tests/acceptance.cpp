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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "mtctc/cli.hpp"
#include "mtctc/ctc.hpp"
#include "mtctc/error.hpp"
#include "mtctc/glyphforge.hpp"
#include "mtctc/manifest.hpp"
#include "mtctc/metrics.hpp"
#include "mtctc/net.hpp"
#include "mtctc/train.hpp"
#include "test_util.hpp"

namespace {

using namespace mtctc;
using namespace mtctc::testing;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double time_limit_s;  // 0 = none
  std::function<Outcome()> run;
};

std::string Fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome CtcOracleEquivalence() {
  Rng rng(20260101);
  int instances = 0;
  double worst = 0.0;
  while (instances < 1000) {
    const int K = 1 + static_cast<int>(rng.Below(3));
    const int T = 1 + static_cast<int>(rng.Below(6));
    const LabelSeq l = RandomLabels(rng, static_cast<int>(rng.Below(4)), K);
    if (!ctc::IsFeasible(T, l)) continue;
    const ctc::LogProbSequence lp = RandomLogProbs(rng, T, K);
    const double dp = std::exp(-ctc::CtcLoss(lp, l).loss);
    worst = std::max(worst, RelativeError(dp, ctc::BruteForceLikelihood(lp, l)));
    ++instances;
  }
  return {worst <= 1e-8, Fmt("%d instances, max rel err %.3g (tol 1e-8)", instances, worst)};
}

Outcome CtcGradientCheck() {
  Rng rng(20260102);
  const double h = 1e-5;
  int instances = 0;
  double worst = 0.0;
  while (instances < 100) {
    const int K = 1 + static_cast<int>(rng.Below(4));
    const LabelSeq l = RandomLabels(rng, 1 + static_cast<int>(rng.Below(5)), K);
    const int T = ctc::MinFrames(l) + static_cast<int>(rng.Below(6));
    const ctc::LogProbSequence lp = RandomLogProbs(rng, T, K);
    const auto g = ctc::CtcGrad(lp, l);
    std::vector<double> z = lp.values();
    double diff = 0, ng = 0, nf = 0;
    for (size_t i = 0; i < z.size(); ++i) {
      const double saved = z[i];
      z[i] = saved + h;
      const double up = ctc::CtcLoss(ctc::LogProbSequence::FromScores(T, K, z), l).loss;
      z[i] = saved - h;
      const double down = ctc::CtcLoss(ctc::LogProbSequence::FromScores(T, K, z), l).loss;
      z[i] = saved;
      const double fd = (up - down) / (2 * h);
      diff += (g[i] - fd) * (g[i] - fd);
      ng += g[i] * g[i];
      nf += fd * fd;
    }
    const double denom = std::max(std::sqrt(ng), std::sqrt(nf));
    worst = std::max(worst, denom == 0 ? 0.0 : std::sqrt(diff) / denom);
    ++instances;
  }
  return {worst < 1e-4,
          Fmt("%d instances, max rel err %.3g (||g-fd||/max(||g||,||fd||), tol 1e-4)", instances,
              worst)};
}

Outcome ModelGradientCheck() {
  Rng rng(20260103);
  auto model = Model<double>::Init(TinyGradConfig());
  JitterParameters(model, rng, 0.1);
  const WordSample s = RandomSample(rng, {0, 2, 1}, {1, 0, 1});
  const GradCheckResult r = CheckModelGradients(model, s);
  return {r.max_rel_error < 1e-3 && r.checked == model.num_parameters(),
          Fmt("%zu parameters, max rel err %.3g at %s (tol 1e-3)", r.checked, r.max_rel_error,
              r.worst.c_str())};
}

Outcome Additivity() {
  const LabelMap map = DefaultLabelMap();
  const SynthAtlas atlas(map, 31);
  ModelConfig cfg;
  cfg.seed = 31;
  const auto model = Model<float>::Init(cfg);
  const auto words = RandomWordList(map, 100, 2, 12, 31);
  int exact = 0;
  for (size_t i = 0; i < words.size(); ++i) {
    const WordSample s = ComposeWordImage(words[i], static_cast<int>(i % 7), atlas, map,
                                          static_cast<int>(i));
    const auto lg = ComputeLossAndGrad(model, s);
    const double c = ctc::CtcLoss(lg.outputs.chars, s.chars).loss;
    const double r = ctc::CtcLoss(*lg.outputs.rows, s.rows).loss;
    const bool ok = lg.losses.row_loss && lg.losses.total == lg.losses.char_loss + *lg.losses.row_loss &&
                    lg.losses.char_loss == c && *lg.losses.row_loss == r && lg.losses.total == c + r;
    exact += ok;
  }
  return {exact == 100, Fmt("%d/100 samples with total == char + row bit-exactly", exact)};
}

Outcome DatasetLaws() {
  const fs::path dir = ScratchDir("c5");
  const LabelMap map = DefaultLabelMap();
  const auto words = RandomWordList(map, 60, 2, 12, 5);
  const SplitSpec spec = SplitSpecFromCounts({5, 2, 3}, {40, 10, 10});
  BuildDataset(words, spec, SynthAtlas(map, 5), map, 5, dir / "ds");
  const DatasetManifest m = LoadManifest(dir / "ds" / kManifestFile);

  bool disjoint = true, count_law = true, width_law = true;
  std::array<std::set<int>, kNumSplits> writers;
  for (int s = 0; s < kNumSplits; ++s) {
    std::set<int> split_words;
    for (const auto& r : m.splits[s]) {
      writers[s].insert(r.writer_id);
      split_words.insert(r.word_id);
    }
    count_law &= m.splits[s].size() == split_words.size() * writers[s].size();
    count_law &= static_cast<int64_t>(m.splits[s].size()) == SplitSampleCounts(spec)[s];
    for (const WordSample& w : LoadSplit(m, kSplitNames[s]))
      width_law &= w.image.width == 32 * static_cast<int>(w.chars.size()) && w.image.height == 32;
  }
  for (int a = 0; a < kNumSplits; ++a)
    for (int b = a + 1; b < kNumSplits; ++b)
      for (int w : writers[a]) disjoint &= writers[b].count(w) == 0;

  std::ostringstream out, err;
  const int code = cli::Run({"gen-data", "--writers", "100,10,10", "--word-counts",
                             "2561,320,320", "--dry-run"},
                            out, err);
  const std::string text = out.str();
  const bool full_scale_counts =
      code == 0 && text.find("= 256100 samples") != std::string::npos &&
      text.find("validation: 320 words x 10 writers = 3200 samples") != std::string::npos &&
      text.find("test: 320 words x 10 writers = 3200 samples") != std::string::npos &&
      !fs::exists(dir / "images");
  return {disjoint && count_law && width_law && full_scale_counts,
          Fmt("disjoint=%d count=%d width=%d dry-run 256100/3200/3200=%d", disjoint, count_law,
              width_law, full_scale_counts)};
}

Outcome OverfitOneSample() {
  const LabelMap map = DefaultLabelMap();
  const WordSample s = ComposeWordImage(CharSeq{1, 5, 5, 9, 2}, 0, SynthAtlas(map, 6), map);
  auto model = Model<float>::Init(ModelConfig{});
  const double initial = EvaluateLoss(model, s).char_loss;
  const TrainOptions defaults;
  for (int i = 0; i < 200; ++i) TrainStep(model, s, defaults.lr, 1.0, defaults.clip_norm);
  const double final_loss = EvaluateLoss(model, s).char_loss;
  return {final_loss < 0.1,
          Fmt("char loss %.4f -> %.4f after 200 steps, lr %.2f, clip %.1f (target < 0.1)",
              initial, final_loss, defaults.lr, defaults.clip_norm)};
}

// Desk-scale comparison of the two-head model against the single-head
// baseline with shared seeds and trunk.
struct DirectionSetup {
  int rows = 4;
  int orders = 3;
  int train_words = 300;
  int heldout_words = 30;
  std::array<int, kNumSplits> writers = {3, 10, 10};
  int max_len = 3;
  std::vector<int> conv = {8, 16};
  int projection = 32;
  int hidden = 32;
  int epochs = 30;
  double lr = TrainOptions{}.lr;
  uint64_t data_seed = 1;
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
};

Outcome DirectionProperty() {
  const DirectionSetup setup;
  const fs::path dir = ScratchDir("c7");
  const LabelMap map = GridLabelMap(setup.rows, setup.orders);
  const auto words = RandomWordList(map, setup.train_words + 2 * setup.heldout_words, 2,
                                    setup.max_len, setup.data_seed);
  SplitSpec spec = SplitSpecFromCounts(
      setup.writers, {setup.train_words, setup.heldout_words, setup.heldout_words});
  spec.max_len = setup.max_len;
  const DatasetManifest m =
      BuildDataset(words, spec, SynthAtlas(map, setup.data_seed), map, setup.data_seed, dir / "ds");
  const auto train = LoadSplit(m, "train");
  const auto validation = LoadSplit(m, "validation");

  int val_no_worse = 0, cer_no_worse = 0;
  double cer_sum[2] = {0, 0};
  for (uint64_t seed : setup.seeds) {
    double val[2], cer[2];
    for (int proposed = 0; proposed < 2; ++proposed) {
      ModelConfig cfg;
      cfg.conv_channels = setup.conv;
      cfg.projection_dim = setup.projection;
      cfg.hidden_size = setup.hidden;
      cfg.num_chars = map.num_chars();
      cfg.num_rows = map.num_rows();
      cfg.aux_head = proposed == 1;
      cfg.max_word_len = setup.max_len;
      cfg.seed = seed;
      Model<float> model = Model<float>::Init(cfg);
      model.label_map_hash = m.label_map_hash;
      TrainOptions opts;
      opts.epochs = setup.epochs;
      opts.lr = setup.lr;
      opts.seed = seed;
      const TrainResult r = Train(std::move(model), train, validation, opts);
      const EvalReport report = Evaluate(r.best_model, m, "test");
      val[proposed] = r.best_val_char_loss;
      cer[proposed] = report.cer;
      cer_sum[proposed] += report.cer;
      std::printf("    seed %llu %-8s best val char loss %.4f  test WER %6.2f  CER %6.2f\n",
                  static_cast<unsigned long long>(seed), proposed ? "proposed" : "baseline",
                  r.best_val_char_loss, report.wer, report.cer);
      std::fflush(stdout);
    }
    val_no_worse += val[1] <= val[0];
    cer_no_worse += cer[1] <= cer[0];
  }
  const double n = static_cast<double>(setup.seeds.size());
  const double mean_base = cer_sum[0] / n, mean_prop = cer_sum[1] / n;
  const bool pass = val_no_worse >= 4 && cer_no_worse >= 4 && mean_prop < mean_base;
  return {pass, Fmt("val loss no worse in %d/5, test CER no worse in %d/5, mean test CER "
                    "%.2f (proposed) vs %.2f (baseline)",
                    val_no_worse, cer_no_worse, mean_prop, mean_base)};
}

Outcome MetricCorrectness() {
  Rng rng(20260108);
  int agree = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto a = RandomLabels(rng, static_cast<int>(rng.Below(13)), 5);
    const auto b = RandomLabels(rng, static_cast<int>(rng.Below(13)), 5);
    agree += EditDistance(a, b) == FullTableEditDistance(a, b);
  }
  const EvalReport blank =
      MakeReport("test", {ScoreSample(0, 0, {1, 2, 3}, {}), ScoreSample(1, 0, {4, 5}, {})});
  const EvalReport perfect =
      MakeReport("test", {ScoreSample(0, 0, {1, 2, 3}, {1, 2, 3}), ScoreSample(1, 0, {4}, {4})});
  // 1 substitution + 1 deletion over 7 reference chars, 2 of 3 words wrong.
  const EvalReport mixed = MakeReport(
      "test", {ScoreSample(0, 0, {1, 2, 3}, {1, 9, 3}), ScoreSample(1, 0, {4, 5}, {4}),
               ScoreSample(2, 1, {6, 7}, {6, 7})});
  const bool formulas = blank.wer == 100.0 && blank.cer == 100.0 && perfect.wer == 0.0 &&
                        perfect.cer == 0.0 && std::abs(mixed.wer - 200.0 / 3.0) < 1e-12 &&
                        std::abs(mixed.cer - 200.0 / 7.0) < 1e-12;
  return {agree == 1000 && formulas,
          Fmt("%d/1000 pairs agree with the full table; all-blank wer=%.1f, perfect wer=%.1f, "
              "mixed wer=%.4f cer=%.4f",
              agree, blank.wer, perfect.wer, mixed.wer, mixed.cer)};
}

Outcome Determinism() {
  const fs::path dir = ScratchDir("c9");
  auto pipeline = [&](const std::string& tag) {
    const fs::path root = dir / tag;
    std::ostringstream out, err;
    auto run = [&](std::vector<std::string> args) {
      if (cli::Run(args, out, err) != 0) throw Error(ErrorKind::kIo, err.str());
    };
    run({"gen-words", "--count", "30", "--max-len", "4", "--seed", "9", "--out",
         (root / "words.txt").string()});
    run({"gen-data", "--words", (root / "words.txt").string(), "--writers", "3,1,1",
         "--max-len", "4", "--seed", "9", "--out", (root / "ds").string()});
    run({"train", "--data", (root / "ds").string(), "--out", (root / "run").string(), "--epochs",
         "2", "--seed", "9", "--conv", "4,8", "--projection", "16", "--hidden", "16"});
    run({"eval", "--checkpoint", (root / "run" / "checkpoint_best.ckpt").string(), "--data",
         (root / "ds").string(), "--out", (root / "run").string()});
  };
  pipeline("a");
  pipeline("b");
  const std::vector<fs::path> files = {"ds/manifest.tsv", "run/curves.csv", "run/eval_test.tsv",
                                       "run/checkpoint_final.ckpt"};
  int identical = 0;
  for (const auto& f : files) identical += ReadFileBytes(dir / "a" / f) == ReadFileBytes(dir / "b" / f);
  return {identical == static_cast<int>(files.size()),
          Fmt("%d/%zu artifacts byte-identical (manifest, curves, eval report, checkpoint)",
              identical, files.size())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "CTC oracle equivalence", 30, CtcOracleEquivalence},
      {2, "CTC gradient check", 60, CtcGradientCheck},
      {3, "End-to-end gradient check", 300, ModelGradientCheck},
      {4, "Loss additivity", 0, Additivity},
      {5, "Dataset laws", 0, DatasetLaws},
      {6, "Overfit one sample", 60, OverfitOneSample},
      {7, "Direction property", 1800, DirectionProperty},
      {8, "Metric correctness", 0, MetricCorrectness},
      {9, "Determinism", 0, Determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = Fmt("%.1fs", secs);
    if (c.time_limit_s > 0) {
      timing += Fmt(" (limit %.0fs)", c.time_limit_s);
      if (secs >= c.time_limit_s) {
        o.pass = false;
        o.detail += "; over time limit";
      }
    }
    std::printf("[%s] %d. %s: %s [%s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), timing.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
