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

namespace mtctc {

// Dense label ids. The blank symbol never appears here; it is owned by the
// output heads (index K of a K-label head).
using LabelSeq = std::vector<int>;
using CharSeq = LabelSeq;
using RowSeq = LabelSeq;

// Character taxonomy: every character id maps to exactly one row id, and every
// row has at least one character. Immutable once constructed.
class LabelMap {
 public:
  // Validates the invariants; throws Error on violation.
  LabelMap(int num_rows, std::vector<int> row_of,
           std::vector<std::string> names = {});

  int num_chars() const { return static_cast<int>(row_of_.size()); }
  int num_rows() const { return num_rows_; }
  int row_of(int char_id) const;
  const std::vector<int>& row_table() const { return row_of_; }
  // Empty string when the record carried no name.
  const std::string& name(int char_id) const;

  // Position of the character among the characters of its row, in id order.
  int order_in_row(int char_id) const;

  bool operator==(const LabelMap&) const = default;

 private:
  int num_rows_;
  std::vector<int> row_of_;
  std::vector<std::string> names_;
  std::vector<int> order_;
};

LabelMap ParseLabelMap(std::string_view text);
LabelMap LoadLabelMap(const std::filesystem::path& path);

// Canonical text form: header then records in ascending character id.
std::string SerializeLabelMap(const LabelMap& map);
void SaveLabelMap(const LabelMap& map, const std::filesystem::path& path);

// Hash of the canonical text form; identifies a map inside manifests and
// checkpoints.
uint64_t LabelMapHash(const LabelMap& map);

// Element-wise character -> row projection.
RowSeq RowsOf(std::span<const int> chars, const LabelMap& map);

// Small synthetic alphabet laid out like a syllabary grid: `num_rows` rows of
// `orders` characters each, char id = row * orders + order.
LabelMap GridLabelMap(int num_rows, int orders);
LabelMap DefaultLabelMap();

}  // namespace mtctc
