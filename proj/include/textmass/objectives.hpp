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

#include <span>
#include <vector>

#include "textmass/core_math.hpp"
#include "textmass/dataset.hpp"
#include "textmass/model.hpp"

namespace textmass {

struct CeLoss {
  double t2v = 0.0;
  double v2t = 0.0;
  double ce = 0.0;
};

/// Symmetric InfoNCE over a square similarity matrix: row-wise (text->video)
/// and column-wise (video->text) softmax cross-entropy with logits sims * lambda.
CeLoss symmetric_ce(const Mat& sims, double lambda);
inline CeLoss symmetric_ce(const Mat& sims, const LogitScale& scale) { return symmetric_ce(sims, scale.value()); }

struct CeGradient {
  Mat d_sims;
  double d_lambda = 0.0;
};

/// d l_ce / d sims and d l_ce / d lambda.
CeGradient symmetric_ce_gradient(const Mat& sims, double lambda);

struct LossBreakdown {
  double l_t2v = 0.0;  // the three ce terms come from the deterministic-t matrix
  double l_v2t = 0.0;
  double l_ce = 0.0;
  double l_s = 0.0;
  double l_sup = 0.0;
  double l_total = 0.0;
  double alpha = 0.0;
  int support_pairs = 0;  // pairs that entered the support matrix
};

struct ObjectiveConfig {
  TrainMode mode = TrainMode::kTMass;
  double alpha = 1.2;
  bool training = false;  // enables fusion dropout
  int samples_per_text = 1;
};

// Every random quantity one forward pass consumes. Recording it lets the
// backward pass and the finite-difference oracle replay the exact same loss.
struct NoiseDraw {
  std::vector<std::vector<Vec>> eps;  // [sample][text]
  std::vector<Vec> dropout_masks;     // N*N row-major (text i, video j); empty = no dropout
};

NoiseDraw draw_noise(SeededRng& rng, std::size_t batch_size, Eigen::Index d, const ObjectiveConfig& cfg,
                     double dropout_rate);

using Batch = std::span<const PairRecord>;

// Forward intermediates for one batch.
struct BatchState {
  std::size_t n = 0;
  std::vector<Vec> text_inputs;  // P_t x_i
  std::vector<EncodedVector> texts;
  std::vector<std::vector<Vec>> frame_inputs;  // [video][frame] P_f y
  std::vector<std::vector<EncodedVector>> frame_codes;
  std::vector<FrameEmbeddingSet> frames;
  std::vector<FrameProjections> projections;
  std::vector<FusionTrace> fusion;  // N*N row-major, v_ij = psi(frames_j, t_i)
  std::vector<Vec> similarities;    // S_i against the paired video
  std::vector<Vec> radii;           // R_i

  const Vec& text(std::size_t i) const { return texts[i].embedding; }
  const Vec& video(std::size_t i, std::size_t j) const { return fusion[i * n + j].video; }
};

/// Encodes the batch, runs the N x N fusion grid and (when `with_radius`)
/// the pair-conditioned radii.
BatchState encode_batch(Batch batch, const ModelParameters& params, bool with_radius, const NoiseDraw& noise);

/// Entry (i, j) = cos(rows[i], v_ij).
Mat similarity_matrix(const BatchState& state, const std::vector<Vec>& rows);

std::vector<Vec> stochastic_texts(const BatchState& state, const std::vector<Vec>& eps);

struct SupportTexts {
  std::vector<Vec> vectors;
  std::vector<std::size_t> kept;  // indices of non-degenerate pairs
};

SupportTexts support_texts(const BatchState& state);

/// l_ce on the rows given by `kept` (a principal submatrix).
double support_loss_from(const BatchState& state, const SupportTexts& sup, double lambda);

/// L_s: one text-mass sample per text drawn from rng, dropout off.
double stochastic_loss(Batch batch, const ModelParameters& params, SeededRng& rng);

/// L_sup: deterministic. Throws DegenerateBatch when every pair is degenerate.
double support_loss(Batch batch, const ModelParameters& params);

/// The full t-mass objective L_s + alpha * L_sup (dropout off).
LossBreakdown total_loss(Batch batch, const ModelParameters& params, double alpha, SeededRng& rng);

/// Loss of `cfg.mode` with all randomness taken from `noise`.
LossBreakdown evaluate_objective(Batch batch, const ModelParameters& params, const ObjectiveConfig& cfg,
                                 const NoiseDraw& noise);

struct BackwardResult {
  LossBreakdown loss;
  GradientSet gradients;
};

/// Analytic gradient of l_total for the trainable tensors of cfg.mode, with the
/// recorded noise treated as constant (pathwise / reparameterised gradient).
BackwardResult backward(Batch batch, const ModelParameters& params, const ObjectiveConfig& cfg,
                        const NoiseDraw& noise);

}  // namespace textmass
