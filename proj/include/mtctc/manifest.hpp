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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtctc/alphabet.hpp"
#include "mtctc/glyphforge.hpp"

namespace mtctc {

inline constexpr int kNumSplits = 3;
inline constexpr std::array<std::string_view, kNumSplits> kSplitNames = {
    "train", "validation", "test"};

// Throws Error(kInvalidArgument) for unknown names.
int SplitIndex(std::string_view name);

// Which writers and how many words go into each split. Writer sets must be
// pairwise disjoint.
struct SplitSpec {
  std::array<std::vector<int>, kNumSplits> writers;
  std::array<int, kNumSplits> word_counts{};
  int min_len = 2;
  int max_len = 12;
};

// Consecutive writer ids: train gets [0, n0), validation [n0, n0+n1), ...
SplitSpec SplitSpecFromCounts(std::array<int, kNumSplits> writer_counts,
                              std::array<int, kNumSplits> word_counts);

// Held-out splits get 10% of the words each (at least one), train the rest.
std::array<int, kNumSplits> DefaultWordCounts(int num_words);

// |split| = words x writers. Pure counting, no validation of ids.
std::array<int64_t, kNumSplits> SplitSampleCounts(const SplitSpec& spec);

struct ManifestRecord {
  int word_id = 0;
  int writer_id = 0;
  int width = 0;
  uint32_t crc32 = 0;
  std::string image;  // relative to the manifest directory
  CharSeq chars;
  RowSeq rows;

  bool operator==(const ManifestRecord&) const = default;
};

struct DatasetManifest {
  uint64_t seed = 0;
  uint64_t label_map_hash = 0;
  std::array<std::vector<ManifestRecord>, kNumSplits> splits;
  // Directory the image paths are relative to; not serialized.
  std::filesystem::path root;

  const std::vector<ManifestRecord>& split(std::string_view name) const {
    return splits[SplitIndex(name)];
  }
  bool operator==(const DatasetManifest& o) const {
    return seed == o.seed && label_map_hash == o.label_map_hash &&
           splits == o.splits;
  }
};

inline constexpr std::string_view kManifestFile = "manifest.tsv";
inline constexpr std::string_view kLabelMapFile = "label_map.tsv";

// Validates the spec and word list, assigns words to splits (seeded shuffle)
// and lays out records. Image checksums are left at zero.
DatasetManifest PlanDataset(std::span<const CharSeq> words,
                            const SplitSpec& spec, const LabelMap& map,
                            uint64_t seed);

// Plans, renders every word image and writes images, label map and manifest
// under `out_dir`. Nothing is left behind in `out_dir` on failure.
DatasetManifest BuildDataset(std::span<const CharSeq> words,
                             const SplitSpec& spec, const Atlas& atlas,
                             const LabelMap& map, uint64_t seed,
                             const std::filesystem::path& out_dir);

std::string SerializeManifest(const DatasetManifest& manifest);
DatasetManifest ParseManifest(std::string_view text,
                              const std::filesystem::path& root);
void SaveManifest(const DatasetManifest& manifest,
                  const std::filesystem::path& path);

// Parses and verifies that every referenced image exists, has the declared
// dimensions and checksum.
DatasetManifest LoadManifest(const std::filesystem::path& path);

// Loads and validates one sample's image.
WordSample LoadSample(const DatasetManifest& manifest,
                      const ManifestRecord& record);

// Streams samples of one split in manifest order.
class SampleStream {
 public:
  SampleStream(const DatasetManifest& manifest, std::string_view split)
      : manifest_(&manifest), records_(&manifest.split(split)) {}
  // The stream borrows the manifest.
  SampleStream(DatasetManifest&&, std::string_view) = delete;

  std::optional<WordSample> Next();
  size_t size() const { return records_->size(); }

 private:
  const DatasetManifest* manifest_;
  const std::vector<ManifestRecord>* records_;
  size_t next_ = 0;
};

inline SampleStream IterateSplit(const DatasetManifest& manifest,
                                 std::string_view split) {
  return SampleStream(manifest, split);
}
SampleStream IterateSplit(DatasetManifest&&, std::string_view) = delete;

std::vector<WordSample> LoadSplit(const DatasetManifest& manifest,
                                  std::string_view split);

}  // namespace mtctc
