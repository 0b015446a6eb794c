// Copyright 2026 The textmass Authors. All Rights Reserved.
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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "textmass/core_math.hpp"
#include "textmass/encoders.hpp"

namespace textmass {

enum class Split { kTrain, kTest };

std::string to_string(Split s);

struct PairRecord {
  std::int64_t pair_id = 0;
  RawText text;
  RawVideo video;
  Split split = Split::kTrain;
};

// Videos carry every concept of a latent vector z plus per-frame distractors
// and noise; texts keep only the `coverage` fraction of z's largest entries.
struct SyntheticSpec {
  int train_pairs = 512;  // K
  int test_pairs = 128;
  int concept_dim = 16;   // c
  int frames = 16;        // T
  double coverage = 0.4;  // rho
  double noise = 0.1;     // sigma
  int distractors = 2;
  double distractor_weight = 0.5;
  std::uint64_t seed = 0;
};

/// Number of coordinates a text keeps: floor(rho * c).
int text_support_size(const SyntheticSpec& spec);

/// Train records first (ids 0..K-1), then test records.
std::vector<PairRecord> generate(const SyntheticSpec& spec);

std::vector<PairRecord> select_split(const std::vector<PairRecord>& records, Split split);

// ---- TMEB embedding files ---------------------------------------------------
//
// magic "TMEB" | u32 version = 1 | u32 item count | u32 rows per item | u32 dim
// followed by row-major little-endian float32 values.

inline constexpr std::uint32_t kEmbeddingFileVersion = 1;
inline constexpr std::uint64_t kEmbeddingHeaderBytes = 20;

struct EmbeddingFile {
  std::uint32_t rows_per_item = 1;
  std::uint32_t dim = 0;
  std::vector<Mat> items;  // each rows_per_item x dim
};

std::vector<std::uint8_t> encode_embeddings(const EmbeddingFile& file);
EmbeddingFile decode_embeddings(const std::vector<std::uint8_t>& bytes);

EmbeddingFile embeddings_from_vectors(const std::vector<Vec>& items, std::uint32_t dim);
EmbeddingFile embeddings_from_frames(const std::vector<FrameEmbeddingSet>& items, std::uint32_t rows,
                                     std::uint32_t dim);

void write_embeddings(const std::filesystem::path& path, const EmbeddingFile& file);
EmbeddingFile read_embeddings(const std::filesystem::path& path);

/// Byte offset of item `index` inside a TMEB file with the given shape.
std::uint64_t embedding_item_offset(std::uint64_t index, std::uint32_t rows_per_item, std::uint32_t dim);

// ---- dataset directories ----------------------------------------------------

/// Writes texts.tmeb (raw text features), videos.tmeb (raw frames) and
/// manifest.csv (`pair_id,split,text_file_offset,video_file_offset`).
void write_dataset(const std::filesystem::path& dir, const std::vector<PairRecord>& records);
std::vector<PairRecord> read_dataset(const std::filesystem::path& dir);

}  // namespace textmass
