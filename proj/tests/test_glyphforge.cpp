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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "mtctc/error.hpp"
#include "mtctc/glyphforge.hpp"
#include "mtctc/manifest.hpp"
#include "test_util.hpp"

using namespace mtctc;
namespace fs = std::filesystem;

namespace {

ErrorKind LoadErrorKind(const fs::path& path, std::string* message = nullptr) {
  try {
    LoadManifest(path);
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.kind();
  }
  FAIL("expected load failure");
  return ErrorKind::kParse;
}

std::vector<CharSeq> TinyWords() {
  return {{0, 1}, {2, 3, 4}, {5, 6}, {7, 8, 9, 10}, {11, 0}, {1, 2, 3}};
}

}  // namespace

TEST_SUITE("glyphforge") {

TEST_CASE("synth_glyph examples") {
  const LabelMap map = DefaultLabelMap();
  const GlyphImage a = SynthGlyph(map, 3, 0, 42);
  CHECK(a.pixels == SynthGlyph(map, 3, 0, 42).pixels);
  CHECK(a.pixels != SynthGlyph(map, 3, 1, 42).pixels);
  CHECK(a.pixels != SynthGlyph(map, 4, 0, 42).pixels);
  CHECK(a.pixels.height == kGlyphSize);
  CHECK(a.pixels.width == kGlyphSize);
  CHECK_THROWS_AS(SynthGlyph(map, 12, 0, 42), Error);
  CHECK_THROWS_AS(SynthGlyph(map, 0, -1, 42), Error);
}

TEST_CASE("synthetic glyphs stay in range and carry ink") {
  const LabelMap map = DefaultLabelMap();
  for (int c = 0; c < map.num_chars(); ++c) {
    for (int w = 0; w < 4; ++w) {
      const GlyphImage g = SynthGlyph(map, c, w, 9);
      const auto [lo, hi] = std::minmax_element(g.pixels.pixels.begin(), g.pixels.pixels.end());
      CHECK(*lo >= 0.0f);
      CHECK(*hi <= 1.0f);
      double ink = 0;
      for (float v : g.pixels.pixels) ink += v;
      CHECK(ink > 20.0);
    }
  }
}

TEST_CASE("writer perturbation keeps a character closer to itself") {
  // Same character across writers correlates more than two characters of the
  // same writer, on average.
  const LabelMap map = DefaultLabelMap();
  auto dist = [](const Image& a, const Image& b) {
    double d = 0;
    for (size_t i = 0; i < a.pixels.size(); ++i) d += std::abs(a.pixels[i] - b.pixels[i]);
    return d;
  };
  double same_char = 0, diff_char = 0;
  int n_same = 0, n_diff = 0;
  for (int c = 0; c < map.num_chars(); ++c) {
    for (int w = 1; w < 4; ++w) {
      same_char += dist(SynthGlyph(map, c, 0, 1).pixels, SynthGlyph(map, c, w, 1).pixels);
      ++n_same;
    }
    for (int d = 0; d < map.num_chars(); ++d) {
      if (d == c || map.row_of(d) == map.row_of(c)) continue;
      diff_char += dist(SynthGlyph(map, c, 0, 1).pixels, SynthGlyph(map, d, 0, 1).pixels);
      ++n_diff;
    }
  }
  CHECK(same_char / n_same < diff_char / n_diff);
}

TEST_CASE("compose_word_image examples") {
  const LabelMap map = DefaultLabelMap();
  const SynthAtlas atlas(map, 5);
  const WordSample four = ComposeWordImage(CharSeq{0, 4, 8, 11}, 2, atlas, map);
  CHECK(four.image.height == 32);
  CHECK(four.image.width == 128);
  CHECK(four.rows == RowsOf(four.chars, map));

  const WordSample one = ComposeWordImage(CharSeq{7}, 1, atlas, map);
  CHECK(one.image == atlas.Glyph(7, 1));

  const WordSample ab = ComposeWordImage(CharSeq{3, 9}, 0, atlas, map);
  const WordSample ba = ComposeWordImage(CharSeq{9, 3}, 0, atlas, map);
  for (int r = 0; r < 32; ++r) {
    for (int c = 0; c < 32; ++c) {
      CHECK(ab.image.at(r, c) == ba.image.at(r, c + 32));
      CHECK(ab.image.at(r, c + 32) == ba.image.at(r, c));
    }
  }
  CHECK_THROWS_AS(ComposeWordImage(CharSeq{12}, 0, atlas, map), Error);
}

TEST_CASE("directory atlas round trip and missing glyphs") {
  const auto dir = testing::ScratchDir("atlas");
  const LabelMap map = GridLabelMap(2, 2);
  const SynthAtlas synth(map, 3);
  const std::vector<int> writers{0, 1};
  ExportAtlas(synth, map.num_chars(), writers, dir);
  const DirAtlas disk(dir);
  CHECK(disk.Has(3, 1));
  CHECK_FALSE(disk.Has(3, 2));
  Image expect = synth.Glyph(2, 1);
  QuantizeTo8Bit(expect);
  CHECK(disk.Glyph(2, 1) == expect);
  try {
    ComposeWordImage(CharSeq{0, 1}, 5, disk, map);
    FAIL("expected missing glyph");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kOutOfRange);
  }
}

TEST_CASE("word lists") {
  const auto words = ParseWordList("# comment\n0 1 2\n\n3  4\n");
  CHECK(words == std::vector<CharSeq>{{0, 1, 2}, {3, 4}});
  CHECK(ParseWordList(SerializeWordList(words)) == words);
  CHECK_THROWS_AS(ParseWordList("0 x\n"), Error);
  const auto random = RandomWordList(DefaultLabelMap(), 50, 2, 12, 8);
  CHECK(random.size() == 50);
  for (const auto& w : random) {
    CHECK(w.size() >= 2);
    CHECK(w.size() <= 12);
  }
  CHECK(random == RandomWordList(DefaultLabelMap(), 50, 2, 12, 8));
}

TEST_CASE("split counting matches the reference corpus layout") {
  const SplitSpec spec = SplitSpecFromCounts({100, 10, 10}, {2561, 320, 320});
  const auto counts = SplitSampleCounts(spec);
  CHECK(counts[0] == 256100);
  CHECK(counts[1] == 3200);
  CHECK(counts[2] == 3200);
  CHECK(DefaultWordCounts(100) == std::array<int, 3>{80, 10, 10});
  CHECK(DefaultWordCounts(3) == std::array<int, 3>{1, 1, 1});
}

TEST_CASE("plan_dataset laws") {
  const LabelMap map = DefaultLabelMap();
  const auto words = RandomWordList(map, 40, 2, 6, 3);
  const SplitSpec spec = SplitSpecFromCounts({4, 2, 3}, {30, 5, 5});
  const DatasetManifest plan = PlanDataset(words, spec, map, 11);
  std::array<std::set<int>, 3> writers;
  std::set<int> seen_words;
  for (int s = 0; s < 3; ++s) {
    std::set<int> split_words;
    for (const auto& r : plan.splits[s]) {
      writers[s].insert(r.writer_id);
      split_words.insert(r.word_id);
      CHECK(r.width == 32 * static_cast<int>(r.chars.size()));
      CHECK(r.rows == RowsOf(r.chars, map));
      CHECK(r.chars == words[r.word_id]);
    }
    CHECK(static_cast<int64_t>(plan.splits[s].size()) == SplitSampleCounts(spec)[s]);
    CHECK(static_cast<int>(split_words.size()) == spec.word_counts[s]);
    for (int w : split_words) CHECK(seen_words.insert(w).second);  // word-disjoint too
  }
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b)
      for (int w : writers[a]) CHECK(writers[b].count(w) == 0);
  CHECK(PlanDataset(words, spec, map, 11) == plan);
  CHECK_FALSE(PlanDataset(words, spec, map, 12) == plan);
}

TEST_CASE("plan_dataset errors") {
  const LabelMap map = DefaultLabelMap();
  const auto words = TinyWords();
  SplitSpec overlap = SplitSpecFromCounts({2, 1, 1}, {4, 1, 1});
  overlap.writers[2] = {0};
  CHECK_THROWS_AS(PlanDataset(words, overlap, map, 1), Error);

  SplitSpec too_long = SplitSpecFromCounts({1, 1, 1}, {4, 1, 1});
  too_long.max_len = 3;
  CHECK_THROWS_AS(PlanDataset(words, too_long, map, 1), Error);

  const std::vector<CharSeq> bad_char{{0, 12}, {1, 2}, {3, 4}};
  CHECK_THROWS_AS(PlanDataset(bad_char, SplitSpecFromCounts({1, 1, 1}, {1, 1, 1}), map, 1), Error);
  CHECK_THROWS_AS(PlanDataset(words, SplitSpecFromCounts({1, 1, 1}, {5, 1, 1}), map, 1), Error);
  CHECK_THROWS_AS(PlanDataset({}, SplitSpecFromCounts({1, 1, 1}, {0, 0, 0}), map, 1), Error);
}

TEST_CASE("build, save, load round trip") {
  const auto dir = testing::ScratchDir("build_roundtrip");
  const LabelMap map = DefaultLabelMap();
  const SynthAtlas atlas(map, 4);
  const SplitSpec spec = SplitSpecFromCounts({2, 1, 1}, {4, 1, 1});
  const DatasetManifest built = BuildDataset(TinyWords(), spec, atlas, map, 4, dir / "ds");
  const DatasetManifest loaded = LoadManifest(dir / "ds" / kManifestFile);
  CHECK(loaded == built);
  CHECK(loaded.split("train").size() == 8);
  CHECK(LoadLabelMap(dir / "ds" / kLabelMapFile) == map);
  CHECK(loaded.label_map_hash == LabelMapHash(map));
  CHECK_FALSE(fs::exists(dir / "ds.staging"));

  auto stream = IterateSplit(loaded, "train");
  size_t i = 0;
  while (auto sample = stream.Next()) {
    const auto& rec = loaded.split("train")[i++];
    CHECK(sample->word_id == rec.word_id);
    CHECK(sample->writer_id == rec.writer_id);
    CHECK(sample->image.width == 32 * static_cast<int>(sample->chars.size()));
    CHECK(sample->rows == RowsOf(sample->chars, map));
    Image expect = ComposeWordImage(rec.chars, rec.writer_id, atlas, map).image;
    QuantizeTo8Bit(expect);
    CHECK(sample->image == expect);
  }
  CHECK(i == 8);
  const auto all = LoadSplit(loaded, "train");
  CHECK(all.size() == 8);
  CHECK(all[3].chars == loaded.split("train")[3].chars);

  // Same inputs, same bytes.
  BuildDataset(TinyWords(), spec, atlas, map, 4, dir / "again");
  CHECK(ReadFileBytes(dir / "ds" / kManifestFile) == ReadFileBytes(dir / "again" / kManifestFile));
  CHECK(ReadFileBytes(dir / "ds" / loaded.split("test")[0].image) ==
        ReadFileBytes(dir / "again" / loaded.split("test")[0].image));

  // Rebuilding in place is idempotent.
  const std::string before = ReadFileBytes(dir / "ds" / kManifestFile);
  CHECK(BuildDataset(TinyWords(), spec, atlas, map, 4, dir / "ds") == built);
  CHECK(ReadFileBytes(dir / "ds" / kManifestFile) == before);
  CHECK(LoadManifest(dir / "ds" / kManifestFile) == built);
}

TEST_CASE("minimal dataset") {
  const auto dir = testing::ScratchDir("minimal");
  const LabelMap map = DefaultLabelMap();
  const std::vector<CharSeq> words{{0, 1}, {2, 3}, {4, 5}};
  const SplitSpec spec = SplitSpecFromCounts({1, 1, 1}, {1, 1, 1});
  const DatasetManifest m = BuildDataset(words, spec, SynthAtlas(map, 1), map, 1, dir / "ds");
  for (const auto& split : m.splits) CHECK(split.size() == 1);
  const DatasetManifest loaded = LoadManifest(dir / "ds" / kManifestFile);
  auto stream = IterateSplit(loaded, "train");
  int n = 0;
  while (stream.Next()) ++n;
  CHECK(n == 1);
}

TEST_CASE("overlapping writers leave nothing behind") {
  const auto dir = testing::ScratchDir("overlap");
  const LabelMap map = DefaultLabelMap();
  SplitSpec spec = SplitSpecFromCounts({1, 1, 1}, {4, 1, 1});
  spec.writers[1] = {0};
  CHECK_THROWS_AS(BuildDataset(TinyWords(), spec, SynthAtlas(map, 1), map, 1, dir / "ds"), Error);
  CHECK_FALSE(fs::exists(dir / "ds"));
  CHECK_FALSE(fs::exists(dir / "ds.staging"));
}

TEST_CASE("load_manifest detects damaged datasets") {
  const auto dir = testing::ScratchDir("damaged");
  const LabelMap map = DefaultLabelMap();
  const SplitSpec spec = SplitSpecFromCounts({1, 1, 1}, {4, 1, 1});
  const auto root = dir / "ds";
  const DatasetManifest m = BuildDataset(TinyWords(), spec, SynthAtlas(map, 1), map, 1, root);
  const auto manifest_path = root / kManifestFile;

  SUBCASE("deleted image") {
    const auto victim = root / m.split("validation")[0].image;
    fs::remove(victim);
    std::string message;
    CHECK(LoadErrorKind(manifest_path, &message) == ErrorKind::kIo);
    CHECK(message.find(m.split("validation")[0].image) != std::string::npos);
  }
  SUBCASE("wrong dimensions") {
    const auto& rec = m.split("train")[0];
    WritePng(Image(32, rec.width + 32), root / rec.image);
    CHECK(LoadErrorKind(manifest_path) == ErrorKind::kInvalidArgument);
  }
  SUBCASE("changed pixels") {
    const auto& rec = m.split("train")[1];
    Image img = ReadPng(root / rec.image);
    img.at(5, 5) = img.at(5, 5) > 0.5f ? 0.0f : 1.0f;
    WritePng(img, root / rec.image);
    CHECK(LoadErrorKind(manifest_path) == ErrorKind::kChecksum);
  }
  SUBCASE("malformed manifest") {
    WriteFileBytes(manifest_path, "#mtctc-manifest v1\ngarbage\n");
    CHECK(LoadErrorKind(manifest_path) == ErrorKind::kParse);
  }
}

}  // TEST_SUITE
