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

#include "mtctc/manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <numeric>
#include <set>
#include <sstream>

#include "mtctc/error.hpp"
#include "mtctc/rng.hpp"

namespace mtctc {

namespace {

constexpr std::string_view kMagic = "#mtctc-manifest v1";
constexpr std::string_view kFields =
    "#fields=split word_id writer_id width crc32 image chars rows";

std::string Hex(uint64_t v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*llx", digits,
                static_cast<unsigned long long>(v));
  return buf;
}

std::string JoinIds(const LabelSeq& ids) {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(ids[i]);
  }
  return out;
}

std::vector<std::string_view> SplitOn(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t pos = 0;
  while (true) {
    const size_t next = s.find(sep, pos);
    out.push_back(s.substr(pos, next == std::string_view::npos ? next : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

uint64_t ParseU64(std::string_view s, int base, int line_no) {
  try {
    size_t used = 0;
    const std::string str(s);
    const uint64_t v = std::stoull(str, &used, base);
    if (used != str.size()) throw std::invalid_argument(str);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::kParse, "manifest line " + std::to_string(line_no) +
                                       ": bad number '" + std::string(s) + "'");
  }
}

LabelSeq ParseIds(std::string_view s, int line_no) {
  LabelSeq ids;
  if (s.empty()) return ids;
  for (auto part : SplitOn(s, ',')) {
    ids.push_back(static_cast<int>(ParseU64(part, 10, line_no)));
  }
  return ids;
}

std::string ImageName(int split, int writer_id, int word_id) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "images/%s/w%04d_%06d.png",
                std::string(kSplitNames[split]).c_str(), writer_id, word_id);
  return buf;
}

// Width and height from the IHDR chunk of a PNG byte stream.
bool PngDimensions(const std::string& bytes, int* width, int* height) {
  if (bytes.size() < 24 || bytes.compare(1, 3, "PNG") != 0) return false;
  auto be32 = [&](size_t off) {
    return (uint32_t(uint8_t(bytes[off])) << 24) |
           (uint32_t(uint8_t(bytes[off + 1])) << 16) |
           (uint32_t(uint8_t(bytes[off + 2])) << 8) |
           uint32_t(uint8_t(bytes[off + 3]));
  };
  *width = static_cast<int>(be32(16));
  *height = static_cast<int>(be32(20));
  return true;
}

void VerifyRecordImage(const DatasetManifest& m, const ManifestRecord& rec,
                       const std::string& bytes) {
  const auto path = m.root / rec.image;
  int w = 0, h = 0;
  if (!PngDimensions(bytes, &w, &h)) {
    throw Error(ErrorKind::kParse, "not a png: " + path.string());
  }
  if (h != kGlyphSize || w != rec.width ||
      w != kGlyphSize * static_cast<int>(rec.chars.size())) {
    throw Error(ErrorKind::kInvalidArgument,
                "dimension mismatch for " + path.string() + ": " +
                    std::to_string(h) + "x" + std::to_string(w));
  }
  if (Crc32(bytes) != rec.crc32) {
    throw Error(ErrorKind::kChecksum, path.string());
  }
}

}  // namespace

int SplitIndex(std::string_view name) {
  for (int i = 0; i < kNumSplits; ++i) {
    if (kSplitNames[i] == name) return i;
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown split '" + std::string(name) + "'");
}

SplitSpec SplitSpecFromCounts(std::array<int, kNumSplits> writer_counts,
                              std::array<int, kNumSplits> word_counts) {
  SplitSpec spec;
  int next = 0;
  for (int s = 0; s < kNumSplits; ++s) {
    if (writer_counts[s] < 0 || word_counts[s] < 0) {
      throw Error(ErrorKind::kInvalidArgument, "negative split count");
    }
    for (int i = 0; i < writer_counts[s]; ++i) spec.writers[s].push_back(next++);
  }
  spec.word_counts = word_counts;
  return spec;
}

std::array<int, kNumSplits> DefaultWordCounts(int num_words) {
  const int held_out = std::max(1, num_words / 10);
  return {num_words - 2 * held_out, held_out, held_out};
}

std::array<int64_t, kNumSplits> SplitSampleCounts(const SplitSpec& spec) {
  std::array<int64_t, kNumSplits> counts{};
  for (int s = 0; s < kNumSplits; ++s) {
    counts[s] = int64_t(spec.word_counts[s]) * int64_t(spec.writers[s].size());
  }
  return counts;
}

DatasetManifest PlanDataset(std::span<const CharSeq> words,
                            const SplitSpec& spec, const LabelMap& map,
                            uint64_t seed) {
  if (words.empty()) throw Error(ErrorKind::kInvalidArgument, "empty word list");

  std::set<int> seen;
  for (int s = 0; s < kNumSplits; ++s) {
    for (int w : spec.writers[s]) {
      if (w < 0) throw Error(ErrorKind::kOutOfRange, "negative writer id");
      if (!seen.insert(w).second) {
        throw Error(ErrorKind::kInvalidArgument,
                    "writer " + std::to_string(w) +
                        " appears in more than one split");
      }
    }
  }

  for (size_t i = 0; i < words.size(); ++i) {
    const int len = static_cast<int>(words[i].size());
    if (len < spec.min_len || len > spec.max_len) {
      throw Error(ErrorKind::kOutOfRange,
                  "word " + std::to_string(i) + " has length " +
                      std::to_string(len) + ", bounds [" +
                      std::to_string(spec.min_len) + "," +
                      std::to_string(spec.max_len) + "]");
    }
    for (int c : words[i]) {
      if (c < 0 || c >= map.num_chars()) {
        throw Error(ErrorKind::kOutOfRange,
                    "word " + std::to_string(i) + " uses char " +
                        std::to_string(c) + " absent from the label map");
      }
    }
  }

  const int64_t needed = std::accumulate(spec.word_counts.begin(),
                                         spec.word_counts.end(), int64_t{0});
  if (needed > static_cast<int64_t>(words.size())) {
    throw Error(ErrorKind::kInvalidArgument,
                "split word counts need " + std::to_string(needed) +
                    " words, list has " + std::to_string(words.size()));
  }

  std::vector<int> order(words.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(DeriveSeed({seed, 0x73706c6974ULL}));
  rng.Shuffle(order);

  DatasetManifest m;
  m.seed = seed;
  m.label_map_hash = LabelMapHash(map);
  size_t cursor = 0;
  for (int s = 0; s < kNumSplits; ++s) {
    std::vector<int> split_words(order.begin() + cursor,
                                 order.begin() + cursor + spec.word_counts[s]);
    cursor += spec.word_counts[s];
    std::sort(split_words.begin(), split_words.end());
    for (int writer : spec.writers[s]) {
      for (int word_id : split_words) {
        ManifestRecord rec;
        rec.word_id = word_id;
        rec.writer_id = writer;
        rec.chars = words[word_id];
        rec.rows = RowsOf(rec.chars, map);
        rec.width = kGlyphSize * static_cast<int>(rec.chars.size());
        rec.image = ImageName(s, writer, word_id);
        m.splits[s].push_back(std::move(rec));
      }
    }
  }
  return m;
}

DatasetManifest BuildDataset(std::span<const CharSeq> words,
                             const SplitSpec& spec, const Atlas& atlas,
                             const LabelMap& map, uint64_t seed,
                             const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  DatasetManifest m = PlanDataset(words, spec, map, seed);

  for (int s = 0; s < kNumSplits; ++s) {
    for (const ManifestRecord& rec : m.splits[s]) {
      for (int c : rec.chars) {
        if (!atlas.Has(c, rec.writer_id)) {
          throw Error(ErrorKind::kOutOfRange,
                      "atlas has no glyph for char " + std::to_string(c) +
                          " writer " + std::to_string(rec.writer_id));
        }
      }
    }
  }

  // Stage everything in a sibling directory and move it into place last.
  fs::path staging = out_dir;
  staging += ".staging";
  fs::remove_all(staging);
  try {
    for (int s = 0; s < kNumSplits; ++s) {
      fs::create_directories(staging / "images" / std::string(kSplitNames[s]));
    }
    for (int s = 0; s < kNumSplits; ++s) {
      auto& records = m.splits[s];
      const int64_t n = static_cast<int64_t>(records.size());
      std::vector<std::exception_ptr> errors(records.size());
      // Each record owns its own file; the manifest keeps plan order.
#pragma omp parallel for schedule(dynamic, 16)
      for (int64_t i = 0; i < n; ++i) {
        ManifestRecord& rec = records[i];
        try {
          const WordSample sample = ComposeWordImage(
              rec.chars, rec.writer_id, atlas, map, rec.word_id);
          const fs::path path = staging / rec.image;
          WritePng(sample.image, path);
          rec.crc32 = Crc32(ReadFileBytes(path));
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
      for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    SaveLabelMap(map, staging / kLabelMapFile);
    SaveManifest(m, staging / kManifestFile);
    if (fs::exists(out_dir)) {
      for (const auto& entry : fs::directory_iterator(staging)) {
        const fs::path target = out_dir / entry.path().filename();
        fs::remove_all(target);
        fs::rename(entry.path(), target);
      }
      fs::remove_all(staging);
    } else {
      if (out_dir.has_parent_path()) fs::create_directories(out_dir.parent_path());
      fs::rename(staging, out_dir);
    }
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }
  m.root = out_dir;
  return m;
}

std::string SerializeManifest(const DatasetManifest& m) {
  std::string out;
  out += kMagic;
  out += "\n#seed=" + std::to_string(m.seed);
  out += "\n#label_map=" + Hex(m.label_map_hash, 16);
  out += "\n";
  out += kFields;
  out += "\n";
  for (int s = 0; s < kNumSplits; ++s) {
    for (const ManifestRecord& r : m.splits[s]) {
      out += kSplitNames[s];
      out += '\t' + std::to_string(r.word_id);
      out += '\t' + std::to_string(r.writer_id);
      out += '\t' + std::to_string(r.width);
      out += '\t' + Hex(r.crc32, 8);
      out += '\t' + r.image;
      out += '\t' + JoinIds(r.chars);
      out += '\t' + JoinIds(r.rows);
      out += '\n';
    }
  }
  return out;
}

DatasetManifest ParseManifest(std::string_view text,
                              const std::filesystem::path& root) {
  DatasetManifest m;
  m.root = root;
  bool have_magic = false, have_seed = false, have_map = false;
  int line_no = 0;
  for (auto line : SplitOn(text, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line == kMagic) {
        have_magic = true;
      } else if (line.substr(0, 6) == "#seed=") {
        m.seed = ParseU64(line.substr(6), 10, line_no);
        have_seed = true;
      } else if (line.substr(0, 11) == "#label_map=") {
        m.label_map_hash = ParseU64(line.substr(11), 16, line_no);
        have_map = true;
      } else if (line.substr(0, 7) == "#fields" && line != kFields) {
        throw Error(ErrorKind::kVersion, "unsupported manifest field order");
      }
      continue;
    }
    if (!have_magic) throw Error(ErrorKind::kParse, "missing manifest header");
    const auto f = SplitOn(line, '\t');
    if (f.size() != 8) {
      throw Error(ErrorKind::kParse, "manifest line " + std::to_string(line_no) +
                                         ": expected 8 fields");
    }
    ManifestRecord r;
    const int split = SplitIndex(f[0]);
    r.word_id = static_cast<int>(ParseU64(f[1], 10, line_no));
    r.writer_id = static_cast<int>(ParseU64(f[2], 10, line_no));
    r.width = static_cast<int>(ParseU64(f[3], 10, line_no));
    r.crc32 = static_cast<uint32_t>(ParseU64(f[4], 16, line_no));
    r.image = std::string(f[5]);
    r.chars = ParseIds(f[6], line_no);
    r.rows = ParseIds(f[7], line_no);
    if (r.chars.empty() || r.chars.size() != r.rows.size()) {
      throw Error(ErrorKind::kParse, "manifest line " + std::to_string(line_no) +
                                         ": chars/rows length mismatch");
    }
    m.splits[split].push_back(std::move(r));
  }
  if (!have_magic || !have_seed || !have_map) {
    throw Error(ErrorKind::kParse, "manifest header incomplete");
  }
  return m;
}

void SaveManifest(const DatasetManifest& manifest,
                  const std::filesystem::path& path) {
  WriteFileBytes(path, SerializeManifest(manifest));
}

DatasetManifest LoadManifest(const std::filesystem::path& path) {
  DatasetManifest m = ParseManifest(ReadFileBytes(path), path.parent_path());
  for (const auto& split : m.splits) {
    for (const auto& rec : split) {
      const auto image_path = m.root / rec.image;
      if (!std::filesystem::exists(image_path)) {
        throw Error(ErrorKind::kIo, "missing image " + image_path.string());
      }
      VerifyRecordImage(m, rec, ReadFileBytes(image_path));
    }
  }
  return m;
}

WordSample LoadSample(const DatasetManifest& manifest,
                      const ManifestRecord& record) {
  const auto path = manifest.root / record.image;
  const std::string bytes = ReadFileBytes(path);
  VerifyRecordImage(manifest, record, bytes);
  WordSample s;
  s.image = ReadPng(path);
  s.chars = record.chars;
  s.rows = record.rows;
  s.writer_id = record.writer_id;
  s.word_id = record.word_id;
  return s;
}

std::optional<WordSample> SampleStream::Next() {
  if (next_ >= records_->size()) return std::nullopt;
  return LoadSample(*manifest_, (*records_)[next_++]);
}

std::vector<WordSample> LoadSplit(const DatasetManifest& manifest,
                                  std::string_view split) {
  const auto& records = manifest.split(split);
  std::vector<WordSample> out(records.size());
  std::vector<std::exception_ptr> errors(records.size());
  const int64_t n = static_cast<int64_t>(records.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (int64_t i = 0; i < n; ++i) {
    try {
      out[i] = LoadSample(manifest, records[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace mtctc
