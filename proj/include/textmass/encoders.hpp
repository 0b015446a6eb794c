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
#include <optional>
#include <vector>

#include "textmass/core_math.hpp"

namespace textmass {

struct RawText {
  Vec features;  // latent concept activations, length c
  std::int64_t id = 0;
};

struct RawVideo {
  std::vector<Vec> frames;  // T raw frames, each length c
  std::int64_t id = 0;
};

// T' sampled frame embeddings stored as the columns of a d x T' matrix.
struct FrameEmbeddingSet {
  Mat frames;
  Eigen::Index count() const { return frames.cols(); }
  Eigen::Index dim() const { return frames.rows(); }
};

// Frozen random towers plus trainable identity-initialised adapters.
struct EncoderStack {
  Mat text_projection;   // d x c, frozen
  Mat frame_projection;  // d x c, frozen
  Mat text_adapter;      // d x d
  Mat frame_adapter;     // d x d
  bool adapters_enabled = true;

  Eigen::Index dim() const { return text_projection.rows(); }
  Eigen::Index concept_dim() const { return text_projection.cols(); }
};

/// Builds the towers from (seed): the text projection has i.i.d. N(0,1)/sqrt(c)
/// entries; the frame projection is sqrt(1 - m^2) * text + m * independent draw,
/// so m = `misalignment` controls how far apart the two towers start.
EncoderStack make_encoder_stack(Eigen::Index d, Eigen::Index c, std::uint64_t seed,
                                double misalignment = 0.3, bool adapters_enabled = true);

struct FusionParameters {
  Mat query;
  Mat key;
  Mat value;
  Mat output;
  double dropout_rate = 0.3;

  Eigen::Index dim() const { return query.rows(); }
};

/// All four maps start at the identity.
FusionParameters make_fusion_parameters(Eigen::Index d, double dropout_rate = 0.3);

// Pre-normalisation activation and its norm; shared by forward and backward.
struct EncodedVector {
  Vec raw;        // adapter * projection * features
  Vec embedding;  // raw / |raw|
  double norm = 0.0;
};

EncodedVector encode_with(const Vec& features, const Mat& projection, const Mat& adapter, bool use_adapter);

Vec encode_text(const RawText& text, const EncoderStack& stack);

/// i_k = floor(k * T / T') for k = 0..T'-1.
std::vector<std::size_t> sample_frame_indices(std::size_t total_frames, std::size_t sampled_frames);

FrameEmbeddingSet encode_frames(const RawVideo& video, std::size_t sampled_frames, const EncoderStack& stack);

// Per-video key/value projections; independent of the conditioning text.
struct FrameProjections {
  Mat keys;    // d x T'
  Mat values;  // d x T'
};

FrameProjections project_frames(const FrameEmbeddingSet& frames, const FusionParameters& p);

// Every intermediate of one text-conditioned pooling, kept for backprop.
struct FusionTrace {
  Vec query;    // W_q t
  Vec weights;  // softmax over frames
  Vec pooled;   // sum_i w_i W_v f_i (before dropout)
  Vec dropped;  // pooled after the dropout mask
  Vec out;      // W_o * dropped
  double out_norm = 0.0;
  Vec video;    // out / |out|
};

/// `dropout_mask`, when present, multiplies the pooled vector elementwise
/// (entries are 0 or 1 / (1 - rate)).
FusionTrace fuse_traced(const FrameProjections& projected, const Vec& text, const FusionParameters& p,
                        const Vec* dropout_mask = nullptr);

/// Inverted-dropout mask of length d drawn from rng.
Vec draw_dropout_mask(SeededRng& rng, Eigen::Index d, double rate);

/// Text-conditioned attention pooling of the frames. Dropout is applied to the
/// pooled vector only when `training` is true, with the mask drawn from rng.
Vec fuse(const FrameEmbeddingSet& frames, const Vec& text, const FusionParameters& p, bool training,
         SeededRng* rng = nullptr);

}  // namespace textmass
