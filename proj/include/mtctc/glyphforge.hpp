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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtctc/alphabet.hpp"
#include "mtctc/image.hpp"

namespace mtctc {

inline constexpr int kGlyphSize = 32;

struct GlyphImage {
  Image pixels;  // kGlyphSize x kGlyphSize
  int char_id = 0;
  int writer_id = 0;
};

struct WordSample {
  Image image;  // kGlyphSize x (kGlyphSize * chars.size())
  CharSeq chars;
  RowSeq rows;
  int writer_id = 0;
  int word_id = -1;
};

// Writer-specific distortion applied on top of a character's base strokes.
struct WriterStyle {
  double rotation_rad = 0.0;   // |rotation| <= 8 degrees
  double shift_x = 0.0;        // pixels, |shift| <= 2
  double shift_y = 0.0;
  double half_width = 1.2;     // stroke half width in pixels
  double noise_sigma = 0.05;
};

WriterStyle StyleForWriter(int writer_id, uint64_t seed);

// Procedural stand-in for a handwritten glyph. Characters of the same row share
// a base stroke pattern; the order within the row adds a small mark, shared
// across rows. Deterministic in (char_id, writer_id, seed).
GlyphImage SynthGlyph(const LabelMap& map, int char_id, int writer_id,
                      uint64_t seed);

class Atlas {
 public:
  virtual ~Atlas() = default;
  virtual bool Has(int char_id, int writer_id) const = 0;
  // Throws Error(kOutOfRange) when the glyph is missing.
  virtual Image Glyph(int char_id, int writer_id) const = 0;
};

class SynthAtlas final : public Atlas {
 public:
  SynthAtlas(LabelMap map, uint64_t seed) : map_(std::move(map)), seed_(seed) {}
  bool Has(int char_id, int writer_id) const override;
  Image Glyph(int char_id, int writer_id) const override;

 private:
  LabelMap map_;
  uint64_t seed_;
};

// Glyphs read from `<root>/<writer_id>/<char_id>.png` (8-bit gray, 32x32).
class DirAtlas final : public Atlas {
 public:
  explicit DirAtlas(std::filesystem::path root) : root_(std::move(root)) {}
  bool Has(int char_id, int writer_id) const override;
  Image Glyph(int char_id, int writer_id) const override;
  std::filesystem::path GlyphPath(int char_id, int writer_id) const;

 private:
  std::filesystem::path root_;
};

void ExportAtlas(const Atlas& atlas, int num_chars, std::span<const int> writers,
                 const std::filesystem::path& root);

// Horizontal concatenation of the writer's glyphs in sequence order.
WordSample ComposeWordImage(std::span<const int> chars, int writer_id,
                            const Atlas& atlas, const LabelMap& map,
                            int word_id = -1);

// Word list: one word per line, character ids separated by whitespace.
std::vector<CharSeq> ParseWordList(std::string_view text);
std::vector<CharSeq> LoadWordList(const std::filesystem::path& path);
std::string SerializeWordList(std::span<const CharSeq> words);

// Uniformly random words with lengths in [min_len, max_len].
std::vector<CharSeq> RandomWordList(const LabelMap& map, int count, int min_len,
                                    int max_len, uint64_t seed);

}  // namespace mtctc
