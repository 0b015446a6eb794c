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
#include <string>

#include "textmass/core_math.hpp"
#include "textmass/encoders.hpp"

namespace textmass {

enum class RadiusVariant { kFixedMean, kScalar, kLinear };

std::string to_string(RadiusVariant v);
RadiusVariant parse_radius_variant(const std::string& s);

// Only the fields of the active variant are trainable. `theta_frozen` pins the
// scalar variant's theta (used to reproduce the fixed-mean variant).
struct RadiusParameters {
  RadiusVariant variant = RadiusVariant::kLinear;
  double theta = 0.0;
  bool theta_frozen = false;
  Mat weights;  // T' x d (linear variant; zeros otherwise)

  Eigen::Index frames() const { return weights.rows(); }
  Eigen::Index dim() const { return weights.cols(); }
};

/// theta = 0 and W = 0, so every variant except fixed-mean starts at R = 1.
RadiusParameters make_radius_parameters(RadiusVariant variant, Eigen::Index sampled_frames, Eigen::Index d);

struct SamplingConfig {
  int trials = 20;  // M
  PriorSpec prior;
  int train_samples_per_text = 1;
};

/// S_i = cos(t, f_i) for every sampled frame.
Vec frame_similarities(const Vec& text, const FrameEmbeddingSet& frames);

/// fixed-mean: exp(mean S); scalar: exp(theta * mean S); linear: exp(S W).
Vec radius(const Vec& similarities, const RadiusParameters& params);

/// t + R (.) eps.
Vec apply_text_mass(const Vec& text, const Vec& radius, const Vec& eps);

/// t_s = t + R (.) eps with eps drawn from the standard normal prior.
Vec sample_text_mass(const Vec& text, const Vec& radius, SeededRng& rng);

inline constexpr double kDegenerateDistance = 1e-9;

/// t + R (.) (v - t) / |v - t|. Throws DegenerateGeometry when |v - t| <= 1e-9.
Vec support_text(const Vec& text, const Vec& video, const Vec& radius);

struct BestSample {
  Vec embedding;
  double similarity = 0.0;
  int trial = 0;  // 0-based index of the winning draw
};

/// Draws M text-mass samples from rng and keeps the one most similar to v.
/// Ties go to the earliest trial.
BestSample select_best_sample(const Vec& text, const Vec& radius, const Vec& video, const SamplingConfig& cfg,
                              SeededRng& rng);

/// The substream owned by one (query, candidate) pair at inference.
SeededRng selection_rng(std::uint64_t seed, std::uint64_t text_id, std::uint64_t video_id);

}  // namespace textmass
