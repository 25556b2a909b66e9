// Copyright 2026 The srnlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Portable checkpoint container:
//
//   SRNLAB1\n
//   key=value lines (model configuration, then free-form metadata)
//   tensors <count>
//   <name> <rows>x<cols> f32 <byte_offset> <byte_length>   (one per tensor)
//   payload <byte_length>
//   <payload: little-endian IEEE-754 binary32, row-major, manifest order>

#ifndef SRNLAB_CHECKPOINT_HPP_
#define SRNLAB_CHECKPOINT_HPP_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "srnlab/model.hpp"

namespace srnlab {

inline constexpr char kCheckpointMagic[] = "SRNLAB1\n";

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
  // Frozen item embeddings the embedding head is ranked against.
  std::optional<Matrix> target_embeddings;
  // Extra key=value provenance lines, preserved verbatim.
  std::vector<std::pair<std::string, std::string>> metadata;

  std::string metadata_value(const std::string& key) const;
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// The manifest text (everything before the payload).
std::string checkpoint_manifest(const std::string& bytes);

// Throws CheckpointError naming the first field that differs.
void require_compatible(const ModelConfig& stored, const ModelConfig& requested);

// Shortest round-trip decimal text for a double.
std::string format_double(double v);

}  // namespace srnlab

#endif  // SRNLAB_CHECKPOINT_HPP_
