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
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "textmass/core_math.hpp"
#include "textmass/dataset.hpp"
#include "textmass/model.hpp"
#include "textmass/text_mass.hpp"

namespace textmass {

enum class Direction { kTextToVideo, kVideoToText };

std::string to_string(Direction d);

struct RetrievalMetrics {
  Direction direction = Direction::kTextToVideo;
  double r1 = 0.0;  // percentages
  double r5 = 0.0;
  double r10 = 0.0;
  double mdr = 0.0;
  double mnr = 0.0;
};

struct RankResult {
  std::vector<int> ranks;  // 1-based rank of the relevant candidate per query
  RetrievalMetrics metrics;
};

/// rank = 1 + #{c : s(q,c) > s(q,rel)} + #{c < rel : s(q,c) == s(q,rel)}.
RankResult rank_metrics(const Mat& sims, const std::vector<int>& relevant,
                        Direction direction = Direction::kTextToVideo);

/// Ranks texts for every video query on the transposed matrix. `relevant[q]`
/// is the video paired with text q; the mapping must be one-to-one.
RetrievalMetrics video_to_text_metrics(const Mat& text_by_video, const std::vector<int>& relevant);

// Text and frame embeddings for an evaluation set, computed once.
struct EncodedSet {
  std::vector<std::int64_t> text_ids;
  std::vector<std::int64_t> video_ids;
  std::vector<Vec> texts;
  std::vector<FrameEmbeddingSet> frames;
  std::vector<FrameProjections> projections;
};

EncodedSet encode_set(std::span<const PairRecord> records, const ModelParameters& params);

struct PairInference {
  Vec video;           // v_qc
  Vec similarities;    // S against the candidate's frames
  Vec radius;          // pair-conditioned R
  double deterministic = 0.0;  // s(t_q, v_qc)
  double best = 0.0;           // best-of-M similarity
};

/// Everything the inference path computes for one (query, candidate) pair.
PairInference infer_pair(const EncodedSet& set, std::size_t q, std::size_t c, const ModelParameters& params,
                         const SamplingConfig& cfg, std::uint64_t seed);

/// Entry (q, c) is the best-of-M similarity with the pair-conditioned radius,
/// or s(t_q, v_qc) when use_sampling is false.
Mat inference_similarity_matrix(const EncodedSet& set, const ModelParameters& params, const SamplingConfig& cfg,
                                bool use_sampling, std::uint64_t seed);

Mat inference_similarity_matrix(std::span<const PairRecord> records, const ModelParameters& params,
                                const SamplingConfig& cfg, bool use_sampling, std::uint64_t seed);

struct EvaluationResult {
  RetrievalMetrics t2v;
  RetrievalMetrics v2t;
};

/// Paired evaluation: query q's relevant candidate is q.
EvaluationResult evaluate_pairs(const Mat& sims);

struct RadiusReportRow {
  std::int64_t query_id = 0;
  std::int64_t candidate_id = 0;
  bool relevant = false;
  double l1_radius = 0.0;
  double best_similarity = 0.0;
};

/// |R|_1 of the pair-conditioned radius for one query against every candidate.
std::vector<RadiusReportRow> radius_dynamics_report(const EncodedSet& set, std::size_t query,
                                                    const ModelParameters& params, const SamplingConfig& cfg,
                                                    std::uint64_t seed);

struct AlignmentRow {
  std::int64_t query_id = 0;
  double max_irrelevant_det = 0.0;
  double max_irrelevant_stoch = 0.0;
  double ce_det = 0.0;    // per-pair text->video cross-entropy term
  double ce_stoch = 0.0;
};

/// Per query: strongest irrelevant similarity under t and under the selected
/// t_s, plus the relevant pair's cross-entropy term -log softmax(lambda * row)[q]
/// for each of the two matrices.
std::vector<AlignmentRow> alignment_report(const Mat& deterministic, const Mat& stochastic, double lambda);

// CSV writers (6 decimal places, fixed headers).
void write_radius_csv(std::ostream& out, const std::vector<RadiusReportRow>& rows, bool header = true);
void write_alignment_csv(std::ostream& out, const std::vector<AlignmentRow>& rows);
void write_metrics_csv(std::ostream& out, const std::vector<RetrievalMetrics>& rows);

std::string format_fixed6(double v);

}  // namespace textmass
