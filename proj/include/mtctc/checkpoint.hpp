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
#include <optional>
#include <string>

#include "mtctc/net.hpp"

namespace mtctc {

// Binary layout (little-endian):
//   "MTCTCKPT"              8 bytes magic
//   u32 format version      kCheckpointVersion
//   u32 scalar bytes        4 (float) or 8 (double)
//   u64 config hash         ModelConfig::Hash()
//   u64 label-map hash
//   u64 step, i32 epoch
//   u32 n, n bytes          ModelConfig::Serialize() text
//   u32 tensor count, then per tensor in declared order:
//     u32 n, n bytes name; u32 rank; i32 dims[rank]; u64 count; raw values
//   u32 CRC-32 of every preceding byte
inline constexpr uint32_t kCheckpointVersion = 1;

// Constraints a caller can place on a checkpoint being loaded; mismatches
// raise Error(kConfigMismatch).
struct CheckpointExpectations {
  std::optional<uint64_t> label_map_hash;
  std::optional<bool> aux_head;
};

template <typename Scalar>
std::string SerializeCheckpoint(const Model<Scalar>& model);

template <typename Scalar>
Model<Scalar> ParseCheckpoint(const std::string& bytes,
                              const CheckpointExpectations& expect = {});

template <typename Scalar>
void SaveCheckpoint(const Model<Scalar>& model, const std::filesystem::path& path);

template <typename Scalar>
Model<Scalar> LoadCheckpoint(const std::filesystem::path& path,
                             const CheckpointExpectations& expect = {});

}  // namespace mtctc
