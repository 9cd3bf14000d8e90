/*
 * Copyright 2026 The TabCF Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef TABCF_CHECKPOINT_H_
#define TABCF_CHECKPOINT_H_

// Binary model container. All integers and floats are little-endian.
//
//   magic        8 bytes  "TABCFCKP"
//   version      u32      (kCheckpointVersion)
//   schema_hash  u64
//   seed         u64
//   n_meta       u32, then n_meta x { str key, i64 value }
//   n_sections   u32, then per section:
//     str name
//     n_meta     u32, then n_meta x { str key, i64 value }
//     n_blocks   u32, then per block:
//       str name, u32 rank, rank x u64 dims, numel x f64 payload
//
// where str is { u32 length, bytes }.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tabcf/classifier.h"
#include "tabcf/schema.h"
#include "tabcf/tensor.h"
#include "tabcf/vae.h"

namespace tabcf {

inline constexpr std::uint32_t kCheckpointVersion = 1;

using MetaList = std::vector<std::pair<std::string, std::int64_t>>;

struct CheckpointSection {
  std::string name;
  MetaList meta;
  std::vector<std::pair<std::string, Tensor>> blocks;

  std::int64_t Meta(const std::string& key) const;
};

struct Checkpoint {
  std::uint64_t schema_hash = 0;
  std::uint64_t seed = 0;
  MetaList meta;
  std::vector<CheckpointSection> sections;

  const CheckpointSection& Section(const std::string& name) const;
};

std::vector<unsigned char> SerializeCheckpoint(const Checkpoint& ckpt);
Checkpoint DeserializeCheckpoint(const std::vector<unsigned char>& bytes);
void WriteCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint ReadCheckpoint(const std::filesystem::path& path);

CheckpointSection VaeToSection(VaeModel& model);
VaeModel VaeFromSection(const CheckpointSection& section, const TableSchema& schema);
CheckpointSection ClassifierToSection(Classifier& model);
Classifier ClassifierFromSection(const CheckpointSection& section);

}  // namespace tabcf

#endif  // TABCF_CHECKPOINT_H_
