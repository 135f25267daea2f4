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

#include "mtctc/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "mtctc/alphabet.hpp"
#include "mtctc/checkpoint.hpp"
#include "mtctc/error.hpp"
#include "mtctc/glyphforge.hpp"
#include "mtctc/metrics.hpp"
#include "mtctc/train.hpp"

namespace mtctc::cli {

namespace fs = std::filesystem;

namespace {

std::vector<int> ParseIntList(std::string_view text) {
  std::vector<int> out;
  std::string s(text);
  std::istringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    if (part.empty()) continue;
    const size_t dash = part.find('-', 1);
    try {
      if (dash != std::string::npos) {
        const int lo = std::stoi(part.substr(0, dash));
        const int hi = std::stoi(part.substr(dash + 1));
        if (hi < lo) throw std::invalid_argument(part);
        for (int v = lo; v <= hi; ++v) out.push_back(v);
      } else {
        size_t used = 0;
        out.push_back(std::stoi(part, &used));
        if (used != part.size()) throw std::invalid_argument(part);
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::kParse, "bad integer list '" + s + "'");
    }
  }
  return out;
}

std::array<int, kNumSplits> ParseTriple(std::string_view text, const char* what) {
  const std::vector<int> v = ParseIntList(text);
  if (v.size() != kNumSplits) {
    throw Error(ErrorKind::kParse, std::string(what) + " needs three values, got '" +
                                       std::string(text) + "'");
  }
  return {v[0], v[1], v[2]};
}

// Holds `<dir>/train.lock` for the lifetime of a training run.
class RunLock {
 public:
  explicit RunLock(fs::path path) : path_(std::move(path)) {
    FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) {
      throw Error(ErrorKind::kIo, "another training run holds " + path_.string());
    }
    std::fclose(f);
  }
  ~RunLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  fs::path path_;
};

std::string FormatPct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string FormatDelta(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%+.2f", v);
  return buf;
}

// ---------------------------------------------------------------------------

struct GenWordsArgs {
  std::string map_path;
  int count = 400;
  int min_len = 2;
  int max_len = 12;
  uint64_t seed = 1;
  std::string out;
};

int GenWords(const GenWordsArgs& a, std::ostream& out) {
  const LabelMap map = a.map_path.empty() ? DefaultLabelMap() : LoadLabelMap(a.map_path);
  const auto words = RandomWordList(map, a.count, a.min_len, a.max_len, a.seed);
  const fs::path path(a.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  WriteFileBytes(path, SerializeWordList(words));
  out << "wrote " << words.size() << " words to " << path.string() << "\n";
  return 0;
}

struct GenDataArgs {
  std::string words;
  std::string writers = "8,2,2";
  std::string word_counts;
  std::string map_path;
  std::string atlas;
  int min_len = 2;
  int max_len = 12;
  uint64_t seed = 1;
  std::string out;
  bool dry_run = false;
};

int GenData(const GenDataArgs& a, std::ostream& out) {
  const auto writer_sets = ParseWriterSpec(a.writers);
  std::vector<CharSeq> words;
  if (!a.words.empty()) words = LoadWordList(a.words);

  SplitSpec spec;
  spec.writers = writer_sets;
  spec.min_len = a.min_len;
  spec.max_len = a.max_len;
  if (!a.word_counts.empty()) {
    spec.word_counts = ParseTriple(a.word_counts, "--word-counts");
  } else if (!words.empty()) {
    spec.word_counts = DefaultWordCounts(static_cast<int>(words.size()));
  } else {
    throw Error(ErrorKind::kInvalidArgument, "--words or --word-counts is required");
  }

  if (a.dry_run) {
    const auto counts = SplitSampleCounts(spec);
    for (int s = 0; s < kNumSplits; ++s) {
      out << kSplitNames[s] << ": " << spec.word_counts[s] << " words x "
          << spec.writers[s].size() << " writers = " << counts[s] << " samples\n";
    }
    return 0;
  }
  if (words.empty()) throw Error(ErrorKind::kInvalidArgument, "--words is required");
  if (a.out.empty()) throw Error(ErrorKind::kInvalidArgument, "--out is required");

  const LabelMap map = a.map_path.empty() ? DefaultLabelMap() : LoadLabelMap(a.map_path);
  std::unique_ptr<Atlas> atlas;
  if (a.atlas.empty()) {
    atlas = std::make_unique<SynthAtlas>(map, a.seed);
  } else {
    atlas = std::make_unique<DirAtlas>(a.atlas);
  }
  const DatasetManifest m = BuildDataset(words, spec, *atlas, map, a.seed, a.out);
  for (int s = 0; s < kNumSplits; ++s) {
    out << kSplitNames[s] << ": " << m.splits[s].size() << " samples\n";
  }
  out << "manifest: " << (fs::path(a.out) / kManifestFile).string() << "\n";
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string mode = "proposed";
  int epochs = 30;
  double lr = TrainOptions{}.lr;
  double lr_decay = 1.0;
  double clip_norm = TrainOptions{}.clip_norm;
  double row_weight = 1.0;
  bool row_weight_set = false;
  uint64_t seed = 1;
  std::string out;
  std::string resume;
  std::string conv = "16,32";
  int kernel = 3;
  int projection = 64;
  int hidden = 64;
  bool unidirectional = false;
};

int TrainCmd(const TrainArgs& a, std::ostream& out) {
  if (a.mode != "baseline" && a.mode != "proposed") {
    throw Error(ErrorKind::kInvalidArgument, "--mode must be baseline or proposed");
  }
  const bool proposed = a.mode == "proposed";
  if (!proposed && a.row_weight_set) {
    throw Error(ErrorKind::kInvalidArgument, "--row-weight requires --mode proposed");
  }
  if (a.out.empty()) throw Error(ErrorKind::kInvalidArgument, "--out is required");

  const fs::path data(a.data);
  const DatasetManifest manifest = LoadManifest(data / kManifestFile);
  const LabelMap map = LoadLabelMap(data / kLabelMapFile);
  if (LabelMapHash(map) != manifest.label_map_hash) {
    throw Error(ErrorKind::kConfigMismatch, "label map does not match the manifest");
  }
  if (proposed && map.num_rows() < 2) {
    throw Error(ErrorKind::kInvalidArgument,
                "proposed mode needs a label map with at least two rows");
  }

  const fs::path out_dir(a.out);
  fs::create_directories(out_dir);
  RunLock lock(out_dir / "train.lock");

  Model<float> model;
  if (!a.resume.empty()) {
    model = LoadCheckpoint<float>(a.resume, {manifest.label_map_hash, proposed});
  } else {
    ModelConfig cfg;
    cfg.conv_channels = ParseIntList(a.conv);
    cfg.kernel_size = a.kernel;
    cfg.projection_dim = a.projection;
    cfg.hidden_size = a.hidden;
    cfg.bidirectional = !a.unidirectional;
    cfg.num_chars = map.num_chars();
    cfg.num_rows = map.num_rows();
    cfg.aux_head = proposed;
    int max_len = 1;
    for (const auto& split : manifest.splits) {
      for (const auto& r : split) max_len = std::max<int>(max_len, int(r.chars.size()));
    }
    cfg.max_word_len = max_len;
    cfg.seed = a.seed;
    model = Model<float>::Init(cfg);
    model.label_map_hash = manifest.label_map_hash;
  }

  const auto train = LoadSplit(manifest, "train");
  const auto validation = LoadSplit(manifest, "validation");

  TrainOptions opts;
  opts.epochs = a.epochs;
  opts.lr = a.lr;
  opts.lr_decay = a.lr_decay;
  opts.clip_norm = a.clip_norm;
  opts.row_weight = a.row_weight;
  opts.seed = a.seed;

  const fs::path curves_path = out_dir / "curves.csv";
  const fs::path best_path = out_dir / "checkpoint_best.ckpt";
  const fs::path final_path = out_dir / "checkpoint_final.ckpt";

  // A resumed run appends to existing curves and keeps beating the best so far.
  std::optional<double> prior_best;
  if (!a.resume.empty() && fs::exists(curves_path)) {
    for (const EpochRecord& r : ParseCurves(ReadFileBytes(curves_path))) {
      if (!prior_best || r.val_char_loss < *prior_best) prior_best = r.val_char_loss;
    }
  } else {
    WriteFileBytes(curves_path, std::string(kCurvesHeader) + "\n");
  }

  {
    std::ofstream cfg_out(out_dir / "run_config.txt", std::ios::trunc);
    cfg_out << "mode=" << a.mode << "\nepochs=" << a.epochs << "\nlr=" << a.lr
            << "\nlr_decay=" << a.lr_decay << "\nclip_norm=" << a.clip_norm << "\nrow_weight=" << a.row_weight
            << "\nseed=" << a.seed << "\n" << model.config().Serialize();
  }

  std::optional<double> best = prior_best;
  auto on_epoch = [&](const EpochRecord& rec, const Model<float>& m) {
    std::ofstream curves(curves_path, std::ios::app);
    curves << FormatCurveRow(rec) << "\n";
    if (!best || rec.val_char_loss < *best) {
      best = rec.val_char_loss;
      SaveCheckpoint(m, best_path);
    }
    out << "epoch " << rec.epoch << " train_loss " << std::fixed
        << std::setprecision(4) << rec.train_loss << " val_char_loss "
        << rec.val_char_loss << " train_word_acc " << std::setprecision(2)
        << rec.train_word_acc << "%\n";
    out.unsetf(std::ios::fixed);
  };

  TrainResult result = Train(std::move(model), train, validation, opts, on_epoch);
  SaveCheckpoint(result.final_model, final_path);
  if (!fs::exists(best_path)) SaveCheckpoint(result.final_model, best_path);
  out << "checkpoints: " << best_path.string() << ", " << final_path.string() << "\n";
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string split = "test";
  std::string out;
};

int EvalCmd(const EvalArgs& a, std::ostream& out) {
  if (a.out.empty()) throw Error(ErrorKind::kInvalidArgument, "--out is required");
  const fs::path data(a.data);
  const DatasetManifest manifest = LoadManifest(data / kManifestFile);
  CheckpointExpectations expect;
  expect.label_map_hash = manifest.label_map_hash;
  const Model<float> model = LoadCheckpoint<float>(a.checkpoint, expect);
  const EvalReport report = Evaluate(model, manifest, a.split);
  fs::create_directories(a.out);
  const fs::path path = fs::path(a.out) / ("eval_" + a.split + ".tsv");
  WriteFileBytes(path, SerializeReport(report));
  out << a.split << ": " << report.num_words << " words, WER " << FormatPct(report.wer)
      << "%, CER " << FormatPct(report.cer) << "%\n"
      << "report: " << path.string() << "\n";
  return 0;
}

struct CompareArgs {
  std::string baseline;
  std::string proposed;
  std::string baseline_label = "baseline";
  std::string proposed_label = "proposed";
  std::string out;
};

int CompareCmd(const CompareArgs& a, std::ostream& out) {
  if (a.out.empty()) throw Error(ErrorKind::kInvalidArgument, "--out is required");
  const EvalReport base = ParseReport(ReadFileBytes(a.baseline));
  const EvalReport prop = ParseReport(ReadFileBytes(a.proposed));

  std::ostringstream csv;
  csv << "model,split,num_words,wer,cer\n";
  csv << a.baseline_label << ',' << base.split << ',' << base.num_words << ','
      << FormatPct(base.wer) << ',' << FormatPct(base.cer) << "\n";
  csv << a.proposed_label << ',' << prop.split << ',' << prop.num_words << ','
      << FormatPct(prop.wer) << ',' << FormatPct(prop.cer) << "\n";
  csv << "delta,,," << FormatDelta(prop.wer - base.wer) << ','
      << FormatDelta(prop.cer - base.cer) << "\n";

  std::ostringstream table;
  table << std::left << std::setw(24) << "Model" << std::setw(12) << "Split"
        << std::right << std::setw(10) << "Words" << std::setw(10) << "WER (%)"
        << std::setw(10) << "CER (%)" << "\n";
  auto row = [&](const std::string& label, const EvalReport& r) {
    table << std::left << std::setw(24) << label << std::setw(12) << r.split
          << std::right << std::setw(10) << r.num_words << std::setw(10)
          << FormatPct(r.wer) << std::setw(10) << FormatPct(r.cer) << "\n";
  };
  row(a.baseline_label, base);
  row(a.proposed_label, prop);
  table << std::left << std::setw(24) << "delta" << std::setw(12) << "" << std::right
        << std::setw(10) << "" << std::setw(10) << FormatDelta(prop.wer - base.wer)
        << std::setw(10) << FormatDelta(prop.cer - base.cer) << "\n";

  fs::create_directories(a.out);
  WriteFileBytes(fs::path(a.out) / "comparison.csv", csv.str());
  WriteFileBytes(fs::path(a.out) / "comparison.txt", table.str());
  out << table.str();
  return 0;
}

}  // namespace

std::array<std::vector<int>, kNumSplits> ParseWriterSpec(std::string_view text) {
  std::array<std::vector<int>, kNumSplits> sets;
  if (text.find(':') == std::string_view::npos) {
    const auto counts = ParseTriple(text, "--writers");
    return SplitSpecFromCounts(counts, {0, 0, 0}).writers;
  }
  std::vector<std::string_view> parts;
  size_t pos = 0;
  while (true) {
    const size_t colon = text.find(':', pos);
    parts.push_back(text.substr(pos, colon == std::string_view::npos ? colon : colon - pos));
    if (colon == std::string_view::npos) break;
    pos = colon + 1;
  }
  if (parts.size() != kNumSplits) {
    throw Error(ErrorKind::kParse, "--writers needs three colon-separated id lists");
  }
  for (int s = 0; s < kNumSplits; ++s) sets[s] = ParseIntList(parts[s]);
  return sets;
}

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-task CTC word recognition: data, training, evaluation"};
  app.set_config("--config", "", "key=value config file (TOML subset)");
  app.require_subcommand(1);

  GenWordsArgs gw;
  auto* gen_words = app.add_subcommand("gen-words", "Write a random word list");
  gen_words->add_option("--map", gw.map_path, "Label map file (default: built-in)");
  gen_words->add_option("--count", gw.count, "Number of words");
  gen_words->add_option("--min-len", gw.min_len);
  gen_words->add_option("--max-len", gw.max_len);
  gen_words->add_option("--seed", gw.seed);
  gen_words->add_option("--out", gw.out, "Output word list file")->required();

  GenDataArgs gd;
  auto* gen_data = app.add_subcommand("gen-data", "Build a writer-disjoint word-image dataset");
  gen_data->add_option("--words", gd.words, "Word list file");
  gen_data->add_option("--writers", gd.writers,
                       "Writers per split: counts 'a,b,c' or id lists 'ids:ids:ids'");
  gen_data->add_option("--word-counts", gd.word_counts,
                       "Words per split 'a,b,c' (default: 10%/10% held out)");
  gen_data->add_option("--map", gd.map_path, "Label map file (default: built-in)");
  gen_data->add_option("--atlas", gd.atlas, "Glyph atlas directory (default: synthetic)");
  gen_data->add_option("--min-len", gd.min_len);
  gen_data->add_option("--max-len", gd.max_len);
  gen_data->add_option("--seed", gd.seed);
  gen_data->add_option("--out", gd.out, "Output dataset directory");
  gen_data->add_flag("--dry-run", gd.dry_run, "Only print per-split sample counts");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train a baseline or proposed model");
  train->add_option("--data", tr.data, "Dataset directory")->required();
  train->add_option("--mode", tr.mode, "baseline | proposed");
  train->add_option("--epochs", tr.epochs);
  train->add_option("--lr", tr.lr);
  train->add_option("--lr-decay", tr.lr_decay, "Per-epoch learning-rate multiplier");
  train->add_option("--clip-norm", tr.clip_norm, "Global gradient-norm cap (0 disables)");
  auto* row_weight = train->add_option("--row-weight", tr.row_weight,
                                       "Weight of the row-head loss (proposed only)");
  train->add_option("--seed", tr.seed);
  train->add_option("--out", tr.out, "Output directory");
  train->add_option("--resume", tr.resume, "Checkpoint to continue from");
  train->add_option("--conv", tr.conv, "Conv channels per layer, e.g. 16,32");
  train->add_option("--kernel", tr.kernel);
  train->add_option("--projection", tr.projection);
  train->add_option("--hidden", tr.hidden);
  train->add_flag("--unidirectional", tr.unidirectional);

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Greedy-decode a split and report WER/CER");
  eval->add_option("--checkpoint", ev.checkpoint)->required();
  eval->add_option("--data", ev.data, "Dataset directory")->required();
  eval->add_option("--split", ev.split);
  eval->add_option("--out", ev.out, "Output directory");

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "Side-by-side WER/CER of two reports");
  compare->add_option("--baseline", cmp.baseline)->required();
  compare->add_option("--proposed", cmp.proposed)->required();
  compare->add_option("--baseline-label", cmp.baseline_label);
  compare->add_option("--proposed-label", cmp.proposed_label);
  compare->add_option("--out", cmp.out, "Output directory");

  std::vector<const char*> argv{"mtctc"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << e.what() << "\n";
    return 2;
  }

  try {
    if (*gen_words) return GenWords(gw, out);
    if (*gen_data) return GenData(gd, out);
    if (*train) {
      tr.row_weight_set = row_weight->count() > 0;
      return TrainCmd(tr, out);
    }
    if (*eval) return EvalCmd(ev, out);
    if (*compare) return CompareCmd(cmp, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace mtctc::cli
