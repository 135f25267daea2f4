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

#include "mtctc/glyphforge.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "mtctc/error.hpp"
#include "mtctc/rng.hpp"

namespace mtctc {

namespace {

struct Point {
  double x;
  double y;
};
using Stroke = std::vector<Point>;  // polyline in unit glyph coordinates

constexpr double kMaxRotationDeg = 8.0;
constexpr double kMaxShiftPx = 2.0;
constexpr double kBaseHalfWidth = 1.2;
constexpr double kHalfWidthSpread = 0.5;
constexpr double kNoiseSigma = 0.05;
constexpr double kPointJitter = 0.015;

enum : uint64_t { kTagRow = 1, kTagWriter = 2, kTagNoise = 3, kTagJitter = 4 };

// Base pattern shared by all characters of a row: a few connected strokes
// confined to the left/central part of the cell so order marks stay readable.
std::vector<Stroke> RowStrokes(int row, uint64_t seed) {
  Rng rng(DeriveSeed({seed, kTagRow, static_cast<uint64_t>(row)}));
  std::vector<Stroke> strokes;
  const int count = 2 + static_cast<int>(rng.Below(2));
  for (int s = 0; s < count; ++s) {
    Stroke stroke;
    const int points = 2 + static_cast<int>(rng.Below(2));
    for (int p = 0; p < points; ++p) {
      stroke.push_back({rng.Uniform(0.18, 0.68), rng.Uniform(0.18, 0.72)});
    }
    strokes.push_back(std::move(stroke));
  }
  return strokes;
}

Stroke Ring(Point centre, double radius) {
  Stroke ring;
  for (int i = 0; i <= 8; ++i) {
    const double a = 2.0 * M_PI * i / 8.0;
    ring.push_back({centre.x + radius * std::cos(a),
                    centre.y + radius * std::sin(a)});
  }
  return ring;
}

// Marks by order within the row, the same for every row.
std::vector<Stroke> OrderMark(int order) {
  static const std::array<std::vector<Stroke>, 7> kMarks = {{
      {},
      {{{0.70, 0.45}, {0.88, 0.45}}},
      {{{0.62, 0.74}, {0.62, 0.90}, {0.80, 0.90}}},
      {Ring({0.80, 0.24}, 0.07)},
      {{{0.22, 0.76}, {0.12, 0.90}}},
      {{{0.28, 0.09}, {0.62, 0.09}}},
      {Ring({0.82, 0.78}, 0.07)},
  }};
  std::vector<Stroke> marks;
  // Orders beyond the table stack marks of the mixed-radix digits.
  int rest = order;
  bool first = true;
  while (first || rest > 0) {
    const int digit = rest % 7;
    for (const Stroke& s : kMarks[digit]) marks.push_back(s);
    rest /= 7;
    first = false;
  }
  return marks;
}

double SegmentDistance(Point p, Point a, Point b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double wx = p.x - a.x, wy = p.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? (wx * vx + wy * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = wx - t * vx, dy = wy - t * vy;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

WriterStyle StyleForWriter(int writer_id, uint64_t seed) {
  Rng rng(DeriveSeed({seed, kTagWriter, static_cast<uint64_t>(writer_id)}));
  WriterStyle style;
  style.rotation_rad = rng.Uniform(-kMaxRotationDeg, kMaxRotationDeg) * M_PI / 180.0;
  style.shift_x = rng.Uniform(-kMaxShiftPx, kMaxShiftPx);
  style.shift_y = rng.Uniform(-kMaxShiftPx, kMaxShiftPx);
  style.half_width =
      kBaseHalfWidth + rng.Uniform(-kHalfWidthSpread, kHalfWidthSpread);
  style.noise_sigma = kNoiseSigma;
  return style;
}

GlyphImage SynthGlyph(const LabelMap& map, int char_id, int writer_id,
                      uint64_t seed) {
  if (writer_id < 0) {
    throw Error(ErrorKind::kOutOfRange,
                "writer id " + std::to_string(writer_id));
  }
  const int row = map.row_of(char_id);
  const int order = map.order_in_row(char_id);

  std::vector<Stroke> strokes = RowStrokes(row, seed);
  for (Stroke& s : OrderMark(order)) strokes.push_back(std::move(s));

  // Correlated-but-perturbed: each writer moves every control point a little.
  Rng jitter(DeriveSeed({seed, kTagJitter, static_cast<uint64_t>(writer_id),
                         static_cast<uint64_t>(char_id)}));
  for (Stroke& s : strokes) {
    for (Point& p : s) {
      p.x += kPointJitter * jitter.Normal();
      p.y += kPointJitter * jitter.Normal();
    }
  }

  const WriterStyle style = StyleForWriter(writer_id, seed);
  const double cos_r = std::cos(style.rotation_rad);
  const double sin_r = std::sin(style.rotation_rad);
  const double half = kGlyphSize / 2.0;

  // Strokes in pixel space after the writer's rotation about the centre.
  std::vector<std::vector<Point>> px;
  px.reserve(strokes.size());
  for (const Stroke& s : strokes) {
    std::vector<Point> out;
    for (const Point& p : s) {
      const double x = p.x * kGlyphSize - half;
      const double y = p.y * kGlyphSize - half;
      out.push_back({cos_r * x - sin_r * y + half + style.shift_x,
                     sin_r * x + cos_r * y + half + style.shift_y});
    }
    px.push_back(std::move(out));
  }

  GlyphImage glyph{Image(kGlyphSize, kGlyphSize), char_id, writer_id};
  Rng noise(DeriveSeed({seed, kTagNoise, static_cast<uint64_t>(writer_id),
                        static_cast<uint64_t>(char_id)}));
  for (int r = 0; r < kGlyphSize; ++r) {
    for (int c = 0; c < kGlyphSize; ++c) {
      const Point p{c + 0.5, r + 0.5};
      double d = 1e9;
      for (const auto& s : px) {
        if (s.size() == 1) d = std::min(d, SegmentDistance(p, s[0], s[0]));
        for (size_t i = 1; i < s.size(); ++i) {
          d = std::min(d, SegmentDistance(p, s[i - 1], s[i]));
        }
      }
      double ink = std::clamp(style.half_width + 0.5 - d, 0.0, 1.0);
      ink += style.noise_sigma * noise.Normal();
      glyph.pixels.at(r, c) = static_cast<float>(std::clamp(ink, 0.0, 1.0));
    }
  }
  return glyph;
}

bool SynthAtlas::Has(int char_id, int writer_id) const {
  return char_id >= 0 && char_id < map_.num_chars() && writer_id >= 0;
}

Image SynthAtlas::Glyph(int char_id, int writer_id) const {
  if (!Has(char_id, writer_id)) {
    throw Error(ErrorKind::kOutOfRange,
                "no glyph for char " + std::to_string(char_id) + " writer " +
                    std::to_string(writer_id));
  }
  return SynthGlyph(map_, char_id, writer_id, seed_).pixels;
}

std::filesystem::path DirAtlas::GlyphPath(int char_id, int writer_id) const {
  return root_ / std::to_string(writer_id) / (std::to_string(char_id) + ".png");
}

bool DirAtlas::Has(int char_id, int writer_id) const {
  return std::filesystem::exists(GlyphPath(char_id, writer_id));
}

Image DirAtlas::Glyph(int char_id, int writer_id) const {
  const auto path = GlyphPath(char_id, writer_id);
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorKind::kOutOfRange, "missing glyph " + path.string());
  }
  Image image = ReadPng(path);
  if (image.height != kGlyphSize || image.width != kGlyphSize) {
    throw Error(ErrorKind::kParse, "glyph is not 32x32: " + path.string());
  }
  return image;
}

void ExportAtlas(const Atlas& atlas, int num_chars, std::span<const int> writers,
                 const std::filesystem::path& root) {
  for (int w : writers) {
    std::filesystem::create_directories(root / std::to_string(w));
    for (int c = 0; c < num_chars; ++c) {
      WritePng(atlas.Glyph(c, w),
               root / std::to_string(w) / (std::to_string(c) + ".png"));
    }
  }
}

WordSample ComposeWordImage(std::span<const int> chars, int writer_id,
                            const Atlas& atlas, const LabelMap& map,
                            int word_id) {
  WordSample sample;
  sample.chars.assign(chars.begin(), chars.end());
  sample.rows = RowsOf(chars, map);
  sample.writer_id = writer_id;
  sample.word_id = word_id;
  sample.image = Image(kGlyphSize, kGlyphSize * static_cast<int>(chars.size()));
  for (size_t i = 0; i < chars.size(); ++i) {
    const Image glyph = atlas.Glyph(chars[i], writer_id);
    for (int r = 0; r < kGlyphSize; ++r) {
      std::copy_n(&glyph.pixels[size_t(r) * kGlyphSize], kGlyphSize,
                  &sample.image.at(r, static_cast<int>(i) * kGlyphSize));
    }
  }
  return sample;
}

std::vector<CharSeq> ParseWordList(std::string_view text) {
  std::vector<CharSeq> words;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    CharSeq word;
    std::string tok;
    while (fields >> tok) {
      try {
        size_t used = 0;
        word.push_back(std::stoi(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw Error(ErrorKind::kParse, "word list line " +
                                           std::to_string(line_no) +
                                           ": bad char id '" + tok + "'");
      }
    }
    if (!word.empty()) words.push_back(std::move(word));
  }
  return words;
}

std::vector<CharSeq> LoadWordList(const std::filesystem::path& path) {
  return ParseWordList(ReadFileBytes(path));
}

std::string SerializeWordList(std::span<const CharSeq> words) {
  std::string out;
  for (const CharSeq& w : words) {
    for (size_t i = 0; i < w.size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(w[i]);
    }
    out += '\n';
  }
  return out;
}

std::vector<CharSeq> RandomWordList(const LabelMap& map, int count, int min_len,
                                    int max_len, uint64_t seed) {
  if (min_len < 1 || max_len < min_len || count < 0) {
    throw Error(ErrorKind::kInvalidArgument, "bad word list parameters");
  }
  Rng rng(DeriveSeed({seed, 0x776f7264ULL}));
  std::vector<CharSeq> words;
  words.reserve(count);
  for (int i = 0; i < count; ++i) {
    const int len = min_len + static_cast<int>(rng.Below(max_len - min_len + 1));
    CharSeq w(len);
    for (int& c : w) c = static_cast<int>(rng.Below(map.num_chars()));
    words.push_back(std::move(w));
  }
  return words;
}

}  // namespace mtctc
