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

#include "textmass/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "textmass/errors.hpp"

namespace textmass {

std::string to_string(Direction d) { return d == Direction::kTextToVideo ? "t2v" : "v2t"; }

std::string format_fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

RankResult rank_metrics(const Mat& sims, const std::vector<int>& relevant, Direction direction) {
  require(static_cast<Eigen::Index>(relevant.size()) == sims.rows(), "rank_metrics: one relevant index per query");
  require(sims.rows() >= 1 && sims.cols() >= 1, "rank_metrics: empty similarity matrix");
  RankResult out;
  out.ranks.reserve(relevant.size());
  for (Eigen::Index q = 0; q < sims.rows(); ++q) {
    const int rel = relevant[static_cast<std::size_t>(q)];
    require(rel >= 0 && rel < sims.cols(), "rank_metrics: relevant index " + std::to_string(rel) + " out of range");
    const double target = sims(q, rel);
    int rank = 1;
    for (Eigen::Index c = 0; c < sims.cols(); ++c) {
      if (sims(q, c) > target || (c < rel && sims(q, c) == target)) ++rank;
    }
    out.ranks.push_back(rank);
  }

  const auto q = static_cast<double>(out.ranks.size());
  auto recall = [&](int k) {
    return 100.0 * static_cast<double>(std::count_if(out.ranks.begin(), out.ranks.end(), [k](int r) { return r <= k; })) / q;
  };
  auto& m = out.metrics;
  m.direction = direction;
  m.r1 = recall(1);
  m.r5 = recall(5);
  m.r10 = recall(10);
  std::vector<int> sorted = out.ranks;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  m.mdr = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  double sum = 0.0;
  for (int r : out.ranks) sum += r;
  m.mnr = sum / q;
  return out;
}

RetrievalMetrics video_to_text_metrics(const Mat& text_by_video, const std::vector<int>& relevant) {
  require(static_cast<Eigen::Index>(relevant.size()) == text_by_video.rows(),
          "video_to_text_metrics: one relevant video per text");
  std::vector<int> text_for_video(static_cast<std::size_t>(text_by_video.cols()), -1);
  for (std::size_t t = 0; t < relevant.size(); ++t) {
    const int v = relevant[t];
    require(v >= 0 && v < text_by_video.cols(), "video_to_text_metrics: relevant index out of range");
    require(text_for_video[static_cast<std::size_t>(v)] < 0, "video_to_text_metrics: pairing is not one-to-one");
    text_for_video[static_cast<std::size_t>(v)] = static_cast<int>(t);
  }
  require(std::none_of(text_for_video.begin(), text_for_video.end(), [](int t) { return t < 0; }),
          "video_to_text_metrics: some video has no paired text");
  return rank_metrics(text_by_video.transpose(), text_for_video, Direction::kVideoToText).metrics;
}

EncodedSet encode_set(std::span<const PairRecord> records, const ModelParameters& params) {
  EncodedSet s;
  const auto frames = static_cast<std::size_t>(params.radius.frames());
  for (const auto& r : records) {
    s.text_ids.push_back(r.text.id);
    s.video_ids.push_back(r.video.id);
    s.texts.push_back(encode_text(r.text, params.encoders));
    s.frames.push_back(encode_frames(r.video, frames, params.encoders));
    s.projections.push_back(project_frames(s.frames.back(), params.fusion));
  }
  return s;
}

PairInference infer_pair(const EncodedSet& set, std::size_t q, std::size_t c, const ModelParameters& params,
                         const SamplingConfig& cfg, std::uint64_t seed) {
  PairInference p;
  const Vec& t = set.texts[q];
  p.video = fuse_traced(set.projections[c], t, params.fusion).video;
  p.deterministic = cosine_similarity(t, p.video);
  p.similarities = frame_similarities(t, set.frames[c]);
  p.radius = radius(p.similarities, params.radius);
  SeededRng rng = selection_rng(seed, static_cast<std::uint64_t>(set.text_ids[q]),
                                static_cast<std::uint64_t>(set.video_ids[c]));
  p.best = select_best_sample(t, p.radius, p.video, cfg, rng).similarity;
  return p;
}

Mat inference_similarity_matrix(const EncodedSet& set, const ModelParameters& params, const SamplingConfig& cfg,
                                bool use_sampling, std::uint64_t seed) {
  const auto nq = static_cast<Eigen::Index>(set.texts.size());
  const auto nc = static_cast<Eigen::Index>(set.frames.size());
  Mat sims(nq, nc);
  for (Eigen::Index q = 0; q < nq; ++q) {
    const Vec& t = set.texts[static_cast<std::size_t>(q)];
    for (Eigen::Index c = 0; c < nc; ++c) {
      const Vec v = fuse_traced(set.projections[static_cast<std::size_t>(c)], t, params.fusion).video;
      if (!use_sampling) {
        sims(q, c) = cosine_similarity(t, v);
        continue;
      }
      const Vec r = radius(frame_similarities(t, set.frames[static_cast<std::size_t>(c)]), params.radius);
      SeededRng rng = selection_rng(seed, static_cast<std::uint64_t>(set.text_ids[static_cast<std::size_t>(q)]),
                                    static_cast<std::uint64_t>(set.video_ids[static_cast<std::size_t>(c)]));
      sims(q, c) = select_best_sample(t, r, v, cfg, rng).similarity;
    }
  }
  return sims;
}

Mat inference_similarity_matrix(std::span<const PairRecord> records, const ModelParameters& params,
                                const SamplingConfig& cfg, bool use_sampling, std::uint64_t seed) {
  return inference_similarity_matrix(encode_set(records, params), params, cfg, use_sampling, seed);
}

EvaluationResult evaluate_pairs(const Mat& sims) {
  require(sims.rows() == sims.cols(), "evaluate_pairs: paired evaluation needs a square matrix");
  std::vector<int> identity(static_cast<std::size_t>(sims.rows()));
  for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = static_cast<int>(i);
  return {rank_metrics(sims, identity).metrics, video_to_text_metrics(sims, identity)};
}

std::vector<RadiusReportRow> radius_dynamics_report(const EncodedSet& set, std::size_t query,
                                                    const ModelParameters& params, const SamplingConfig& cfg,
                                                    std::uint64_t seed) {
  require(query < set.texts.size(), "radius_dynamics_report: query out of range");
  std::vector<RadiusReportRow> rows;
  for (std::size_t c = 0; c < set.frames.size(); ++c) {
    const PairInference p = infer_pair(set, query, c, params, cfg, seed);
    rows.push_back({set.text_ids[query], set.video_ids[c], c == query, p.radius.lpNorm<1>(), p.best});
  }
  return rows;
}

namespace {

double relevant_ce_term(const Mat& sims, Eigen::Index q, double lambda) {
  const Vec z = sims.row(q).transpose() * lambda;
  const double mx = z.maxCoeff();
  return mx + std::log((z.array() - mx).exp().sum()) - z[q];
}

}  // namespace

std::vector<AlignmentRow> alignment_report(const Mat& deterministic, const Mat& stochastic, double lambda) {
  require(deterministic.rows() == deterministic.cols() && deterministic.rows() == stochastic.rows() &&
              deterministic.cols() == stochastic.cols(),
          "alignment_report: need two square matrices of equal size");
  require(deterministic.rows() >= 2, "alignment_report: need at least one irrelevant candidate");
  std::vector<AlignmentRow> rows;
  for (Eigen::Index q = 0; q < deterministic.rows(); ++q) {
    AlignmentRow r;
    r.query_id = q;
    r.max_irrelevant_det = -1.0;
    r.max_irrelevant_stoch = -1.0;
    for (Eigen::Index c = 0; c < deterministic.cols(); ++c) {
      if (c == q) continue;
      r.max_irrelevant_det = std::max(r.max_irrelevant_det, deterministic(q, c));
      r.max_irrelevant_stoch = std::max(r.max_irrelevant_stoch, stochastic(q, c));
    }
    r.ce_det = relevant_ce_term(deterministic, q, lambda);
    r.ce_stoch = relevant_ce_term(stochastic, q, lambda);
    rows.push_back(r);
  }
  return rows;
}

void write_radius_csv(std::ostream& out, const std::vector<RadiusReportRow>& rows, bool header) {
  if (header) out << "query_id,candidate_id,relevant,l1_radius,best_similarity\n";
  for (const auto& r : rows) {
    out << r.query_id << ',' << r.candidate_id << ',' << (r.relevant ? 1 : 0) << ',' << format_fixed6(r.l1_radius)
        << ',' << format_fixed6(r.best_similarity) << '\n';
  }
}

void write_alignment_csv(std::ostream& out, const std::vector<AlignmentRow>& rows) {
  out << "query_id,max_irrelevant_sim_det,max_irrelevant_sim_stoch,ce_det,ce_stoch\n";
  for (const auto& r : rows) {
    out << r.query_id << ',' << format_fixed6(r.max_irrelevant_det) << ',' << format_fixed6(r.max_irrelevant_stoch)
        << ',' << format_fixed6(r.ce_det) << ',' << format_fixed6(r.ce_stoch) << '\n';
  }
}

void write_metrics_csv(std::ostream& out, const std::vector<RetrievalMetrics>& rows) {
  out << "direction,r1,r5,r10,mdr,mnr\n";
  for (const auto& m : rows) {
    out << to_string(m.direction) << ',' << format_fixed6(m.r1) << ',' << format_fixed6(m.r5) << ','
        << format_fixed6(m.r10) << ',' << format_fixed6(m.mdr) << ',' << format_fixed6(m.mnr) << '\n';
  }
}

}  // namespace textmass
