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

#include "textmass/encoders.hpp"

#include <cmath>
#include <string>

#include "textmass/errors.hpp"

namespace textmass {

namespace {
constexpr double kNormFloor = 1e-12;
}

EncoderStack make_encoder_stack(Eigen::Index d, Eigen::Index c, std::uint64_t seed, double misalignment,
                                bool adapters_enabled) {
  require(d >= 1 && c >= 1, "make_encoder_stack: dimensions must be positive");
  require(misalignment >= 0.0 && misalignment <= 1.0, "make_encoder_stack: misalignment must lie in [0, 1]");
  SeededRng text_rng(seed, substream({0x7E47, 1}));
  SeededRng frame_rng(seed, substream({0x7E47, 2}));
  const double scale = 1.0 / std::sqrt(static_cast<double>(c));
  EncoderStack s;
  s.text_projection.resize(d, c);
  s.frame_projection.resize(d, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) s.text_projection(i, j) = text_rng.next_gaussian() * scale;
  }
  const double keep = std::sqrt(1.0 - misalignment * misalignment);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      s.frame_projection(i, j) = keep * s.text_projection(i, j) + misalignment * frame_rng.next_gaussian() * scale;
    }
  }
  s.text_adapter = Mat::Identity(d, d);
  s.frame_adapter = Mat::Identity(d, d);
  s.adapters_enabled = adapters_enabled;
  return s;
}

FusionParameters make_fusion_parameters(Eigen::Index d, double dropout_rate) {
  require(d >= 1, "make_fusion_parameters: d must be positive");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, "make_fusion_parameters: dropout rate must lie in [0, 1)");
  FusionParameters p;
  p.query = Mat::Identity(d, d);
  p.key = Mat::Identity(d, d);
  p.value = Mat::Identity(d, d);
  p.output = Mat::Identity(d, d);
  p.dropout_rate = dropout_rate;
  return p;
}

EncodedVector encode_with(const Vec& features, const Mat& projection, const Mat& adapter, bool use_adapter) {
  require(features.size() == projection.cols(),
          "encode: feature length " + std::to_string(features.size()) + " does not match encoder input " +
              std::to_string(projection.cols()));
  require_finite(features, "encode");
  EncodedVector e;
  const Vec projected = projection * features;
  e.raw = use_adapter ? Vec(adapter * projected) : projected;
  e.norm = e.raw.norm();
  require(e.norm > kNormFloor, "encode: zero-norm activation");
  e.embedding = e.raw / e.norm;
  return e;
}

Vec encode_text(const RawText& text, const EncoderStack& stack) {
  return encode_with(text.features, stack.text_projection, stack.text_adapter, stack.adapters_enabled).embedding;
}

std::vector<std::size_t> sample_frame_indices(std::size_t total_frames, std::size_t sampled_frames) {
  require(sampled_frames >= 1, "sample_frame_indices: need at least one sampled frame");
  require(total_frames >= sampled_frames, "sample_frame_indices: video has " + std::to_string(total_frames) +
                                              " frames, fewer than the " + std::to_string(sampled_frames) +
                                              " requested");
  std::vector<std::size_t> idx(sampled_frames);
  for (std::size_t k = 0; k < sampled_frames; ++k) idx[k] = k * total_frames / sampled_frames;
  return idx;
}

FrameEmbeddingSet encode_frames(const RawVideo& video, std::size_t sampled_frames, const EncoderStack& stack) {
  const auto idx = sample_frame_indices(video.frames.size(), sampled_frames);
  FrameEmbeddingSet out;
  out.frames.resize(stack.dim(), static_cast<Eigen::Index>(sampled_frames));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.frames.col(static_cast<Eigen::Index>(k)) =
        encode_with(video.frames[idx[k]], stack.frame_projection, stack.frame_adapter, stack.adapters_enabled)
            .embedding;
  }
  return out;
}

FrameProjections project_frames(const FrameEmbeddingSet& frames, const FusionParameters& p) {
  require(frames.dim() == p.dim(), "project_frames: dimension mismatch");
  return {p.key * frames.frames, p.value * frames.frames};
}

FusionTrace fuse_traced(const FrameProjections& projected, const Vec& text, const FusionParameters& p,
                        const Vec* dropout_mask) {
  require(text.size() == p.dim() && projected.keys.rows() == p.dim(), "fuse: dimension mismatch");
  FusionTrace tr;
  tr.query = p.query * text;
  const Vec logits = projected.keys.transpose() * tr.query;
  tr.weights = softmax(logits, 1.0 / std::sqrt(static_cast<double>(p.dim())));
  tr.pooled = projected.values * tr.weights;
  if (dropout_mask != nullptr) {
    require(dropout_mask->size() == p.dim(), "fuse: dropout mask has wrong length");
    tr.dropped = tr.pooled.cwiseProduct(*dropout_mask);
  } else {
    tr.dropped = tr.pooled;
  }
  tr.out = p.output * tr.dropped;
  tr.out_norm = tr.out.norm();
  require(tr.out_norm > kNormFloor, "fuse: zero-norm fused video");
  tr.video = tr.out / tr.out_norm;
  return tr;
}

Vec draw_dropout_mask(SeededRng& rng, Eigen::Index d, double rate) {
  require(rate >= 0.0 && rate < 1.0, "draw_dropout_mask: rate must lie in [0, 1)");
  Vec mask(d);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < d; ++i) mask[i] = rng.next_uniform() < rate ? 0.0 : keep_scale;
  return mask;
}

Vec fuse(const FrameEmbeddingSet& frames, const Vec& text, const FusionParameters& p, bool training,
         SeededRng* rng) {
  const auto projected = project_frames(frames, p);
  if (training && p.dropout_rate > 0.0) {
    require(rng != nullptr, "fuse: training-mode dropout needs an rng");
    const Vec mask = draw_dropout_mask(*rng, p.dim(), p.dropout_rate);
    return fuse_traced(projected, text, p, &mask).video;
  }
  return fuse_traced(projected, text, p, nullptr).video;
}

}  // namespace textmass
