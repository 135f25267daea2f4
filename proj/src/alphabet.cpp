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

#include "mtctc/alphabet.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>

#include "mtctc/error.hpp"
#include "mtctc/rng.hpp"

namespace mtctc {

namespace {

int ParseInt(std::string_view s, int line_no, const char* what) {
  int value = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) +
                                       ": bad " + what + " '" +
                                       std::string(s) + "'");
  }
  return value;
}

}  // namespace

LabelMap::LabelMap(int num_rows, std::vector<int> row_of,
                   std::vector<std::string> names)
    : num_rows_(num_rows), row_of_(std::move(row_of)), names_(std::move(names)) {
  if (row_of_.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "label map has no characters");
  }
  if (num_rows_ < 1) {
    throw Error(ErrorKind::kInvalidArgument, "label map has no rows");
  }
  if (names_.empty()) names_.resize(row_of_.size());
  if (names_.size() != row_of_.size()) {
    throw Error(ErrorKind::kInvalidArgument, "names/characters size mismatch");
  }
  std::vector<int> per_row(num_rows_, 0);
  order_.resize(row_of_.size());
  for (size_t c = 0; c < row_of_.size(); ++c) {
    const int r = row_of_[c];
    if (r < 0 || r >= num_rows_) {
      throw Error(ErrorKind::kOutOfRange,
                  "character " + std::to_string(c) + " maps to row " +
                      std::to_string(r) + " but rows=" +
                      std::to_string(num_rows_));
    }
    order_[c] = per_row[r]++;
  }
  for (int r = 0; r < num_rows_; ++r) {
    if (per_row[r] == 0) {
      throw Error(ErrorKind::kInvalidArgument,
                  "row " + std::to_string(r) + " has no characters");
    }
  }
}

int LabelMap::row_of(int char_id) const {
  if (char_id < 0 || char_id >= num_chars()) {
    throw Error(ErrorKind::kOutOfRange,
                "character id " + std::to_string(char_id));
  }
  return row_of_[char_id];
}

const std::string& LabelMap::name(int char_id) const {
  row_of(char_id);
  return names_[char_id];
}

int LabelMap::order_in_row(int char_id) const {
  row_of(char_id);
  return order_[char_id];
}

LabelMap ParseLabelMap(std::string_view text) {
  std::optional<int> num_chars;
  std::optional<int> num_rows;
  std::vector<std::optional<int>> rows;
  std::vector<std::string> names;

  int line_no = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    if (line.front() == '#') {
      if (num_chars) {
        throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) +
                                           ": duplicate header");
      }
      // #chars=<N> rows=<R>
      std::string_view rest = line.substr(1);
      const size_t sp = rest.find(' ');
      if (sp == std::string_view::npos || rest.substr(0, 6) != "chars=" ||
          rest.substr(sp + 1, 5) != "rows=") {
        throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) +
                                           ": malformed header");
      }
      num_chars = ParseInt(rest.substr(6, sp - 6), line_no, "chars count");
      num_rows = ParseInt(rest.substr(sp + 6), line_no, "rows count");
      if (*num_chars < 1 || *num_rows < 1) {
        throw Error(ErrorKind::kParse, "header counts must be positive");
      }
      rows.assign(*num_chars, std::nullopt);
      names.assign(*num_chars, std::string());
      continue;
    }
    if (!num_chars) {
      throw Error(ErrorKind::kParse, "record before '#chars=' header");
    }

    const size_t t1 = line.find('\t');
    if (t1 == std::string_view::npos) {
      throw Error(ErrorKind::kParse,
                  "line " + std::to_string(line_no) + ": expected char_id<TAB>row_id");
    }
    const size_t t2 = line.find('\t', t1 + 1);
    const int char_id = ParseInt(line.substr(0, t1), line_no, "char id");
    const int row_id = ParseInt(
        line.substr(t1 + 1, t2 == std::string_view::npos ? std::string_view::npos
                                                         : t2 - t1 - 1),
        line_no, "row id");
    if (char_id < 0 || char_id >= *num_chars) {
      throw Error(ErrorKind::kOutOfRange, "line " + std::to_string(line_no) +
                                              ": char id " +
                                              std::to_string(char_id));
    }
    if (row_id < 0 || row_id >= *num_rows) {
      throw Error(ErrorKind::kOutOfRange,
                  "line " + std::to_string(line_no) + ": char " +
                      std::to_string(char_id) + " mapped to row " +
                      std::to_string(row_id) + " but rows=" +
                      std::to_string(*num_rows));
    }
    if (rows[char_id]) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) +
                                         ": duplicate char id " +
                                         std::to_string(char_id));
    }
    rows[char_id] = row_id;
    if (t2 != std::string_view::npos) names[char_id] = line.substr(t2 + 1);
  }

  if (!num_chars) throw Error(ErrorKind::kParse, "missing '#chars=' header");
  std::vector<int> row_of(*num_chars);
  for (int c = 0; c < *num_chars; ++c) {
    if (!rows[c]) {
      throw Error(ErrorKind::kParse,
                  "char id " + std::to_string(c) + " has no row");
    }
    row_of[c] = *rows[c];
  }
  return LabelMap(*num_rows, std::move(row_of), std::move(names));
}

LabelMap LoadLabelMap(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return ParseLabelMap(ss.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
}

std::string SerializeLabelMap(const LabelMap& map) {
  std::string out = "#chars=" + std::to_string(map.num_chars()) +
                    " rows=" + std::to_string(map.num_rows()) + "\n";
  for (int c = 0; c < map.num_chars(); ++c) {
    out += std::to_string(c);
    out += '\t';
    out += std::to_string(map.row_of(c));
    if (!map.name(c).empty()) {
      out += '\t';
      out += map.name(c);
    }
    out += '\n';
  }
  return out;
}

void SaveLabelMap(const LabelMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << SerializeLabelMap(map);
}

uint64_t LabelMapHash(const LabelMap& map) {
  return Fnv1a64(SerializeLabelMap(map));
}

RowSeq RowsOf(std::span<const int> chars, const LabelMap& map) {
  RowSeq rows;
  rows.reserve(chars.size());
  for (int c : chars) rows.push_back(map.row_of(c));
  return rows;
}

LabelMap GridLabelMap(int num_rows, int orders) {
  if (num_rows < 1 || orders < 1) {
    throw Error(ErrorKind::kInvalidArgument, "grid needs rows>0 and orders>0");
  }
  std::vector<int> row_of;
  std::vector<std::string> names;
  for (int r = 0; r < num_rows; ++r) {
    for (int o = 0; o < orders; ++o) {
      row_of.push_back(r);
      names.push_back("r" + std::to_string(r) + "o" + std::to_string(o));
    }
  }
  return LabelMap(num_rows, std::move(row_of), std::move(names));
}

LabelMap DefaultLabelMap() { return GridLabelMap(4, 3); }

}  // namespace mtctc
