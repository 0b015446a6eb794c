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

#include "textmass/text_mass.hpp"

#include <cmath>

#include "textmass/errors.hpp"

namespace textmass {

std::string to_string(RadiusVariant v) {
  switch (v) {
    case RadiusVariant::kFixedMean:
      return "fixed-mean";
    case RadiusVariant::kScalar:
      return "scalar";
    case RadiusVariant::kLinear:
      return "linear";
  }
  return "?";
}

RadiusVariant parse_radius_variant(const std::string& s) {
  if (s == "fixed-mean") return RadiusVariant::kFixedMean;
  if (s == "scalar") return RadiusVariant::kScalar;
  if (s == "linear") return RadiusVariant::kLinear;
  throw ContractViolation("unknown radius variant '" + s + "' (expected fixed-mean|scalar|linear)");
}

RadiusParameters make_radius_parameters(RadiusVariant variant, Eigen::Index sampled_frames, Eigen::Index d) {
  require(sampled_frames >= 1 && d >= 1, "make_radius_parameters: dimensions must be positive");
  RadiusParameters p;
  p.variant = variant;
  p.theta = 0.0;
  p.weights = Mat::Zero(sampled_frames, d);
  return p;
}

Vec frame_similarities(const Vec& text, const FrameEmbeddingSet& frames) {
  require(text.size() == frames.dim(), "frame_similarities: dimension mismatch");
  Vec s(frames.count());
  for (Eigen::Index i = 0; i < frames.count(); ++i) s[i] = cosine_similarity(text, frames.frames.col(i));
  return s;
}

Vec radius(const Vec& similarities, const RadiusParameters& params) {
  require(similarities.size() == params.frames(),
          "radius: similarity vector has " + std::to_string(similarities.size()) + " entries, expected " +
              std::to_string(params.frames()));
  const Eigen::Index d = params.dim();
  switch (params.variant) {
    case RadiusVariant::kFixedMean:
      return Vec::Constant(d, std::exp(similarities.mean()));
    case RadiusVariant::kScalar:
      return Vec::Constant(d, std::exp(params.theta * similarities.mean()));
    case RadiusVariant::kLinear:
      return (params.weights.transpose() * similarities).array().exp().matrix();
  }
  throw ContractViolation("radius: unknown variant");
}

Vec apply_text_mass(const Vec& text, const Vec& radius, const Vec& eps) {
  require(text.size() == radius.size() && text.size() == eps.size(), "text mass: dimension mismatch");
  return text + radius.cwiseProduct(eps);
}

Vec sample_text_mass(const Vec& text, const Vec& radius, SeededRng& rng) {
  return apply_text_mass(text, radius, sample_gaussian(rng, text.size()));
}

Vec support_text(const Vec& text, const Vec& video, const Vec& radius) {
  require(text.size() == video.size() && text.size() == radius.size(), "support_text: dimension mismatch");
  const Vec delta = video - text;
  const double dist = delta.norm();
  if (dist <= kDegenerateDistance) throw DegenerateGeometry("support_text: video coincides with text");
  return text + (delta / dist).cwiseProduct(radius);
}

BestSample select_best_sample(const Vec& text, const Vec& radius, const Vec& video, const SamplingConfig& cfg,
                              SeededRng& rng) {
  require(cfg.trials >= 1, "select_best_sample: M must be >= 1");
  BestSample best;
  for (int m = 0; m < cfg.trials; ++m) {
    Vec candidate = sample_text_mass(text, radius, rng);
    const double s = cosine_similarity(candidate, video);
    if (m == 0 || s > best.similarity) {
      best.embedding = std::move(candidate);
      best.similarity = s;
      best.trial = m;
    }
  }
  return best;
}

SeededRng selection_rng(std::uint64_t seed, std::uint64_t text_id, std::uint64_t video_id) {
  return SeededRng(seed, substream({0x5E1EC7, text_id, video_id}));
}

}  // namespace textmass
