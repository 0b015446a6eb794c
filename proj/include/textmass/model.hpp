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
#include <vector>

#include "textmass/core_math.hpp"
#include "textmass/encoders.hpp"
#include "textmass/text_mass.hpp"

namespace textmass {

// Which objective a run optimises.
//   kTMass    : L_s + alpha * L_sup on stochastic text embeddings.
//   kBaseline : L_ce on the deterministic text embedding (no radius at all).
//   kCePlusS  : L_ce + L_s, the ablation that keeps the deterministic term.
enum class TrainMode { kTMass, kBaseline, kCePlusS };

std::string to_string(TrainMode m);
TrainMode parse_train_mode(const std::string& s);

enum class ParamGroup { kAdapter, kHead };

struct LogitScale {
  static constexpr double kMaxLambda = 100.0;
  double log_lambda = 0.0;
  double value() const;
  bool clamped() const;
};

double default_log_lambda();  // ln(1 / 0.07)

struct ModelConfig {
  Eigen::Index dim = 32;             // d
  Eigen::Index concept_dim = 16;     // c
  Eigen::Index sampled_frames = 8;   // T'
  RadiusVariant radius = RadiusVariant::kLinear;
  double dropout = 0.3;
  double tower_misalignment = 0.3;
  bool adapters_enabled = true;
};

struct ModelParameters {
  EncoderStack encoders;
  FusionParameters fusion;
  RadiusParameters radius;
  LogitScale logit_scale;
};

ModelParameters make_model(const ModelConfig& cfg, std::uint64_t seed);

/// Same shapes as `m`, every tensor zero. Used for gradients and moments.
ModelParameters zeros_like(const ModelParameters& m);

struct ParamView {
  std::string name;
  ParamGroup group = ParamGroup::kHead;
  double* data = nullptr;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  bool decay = true;
  bool trainable = true;

  Eigen::Index size() const { return rows * cols; }
};

/// The tensors updated in `mode`, in a fixed order. Frozen projections never
/// appear; radius tensors appear only for the stochastic modes and variants
/// that own them.
std::vector<ParamView> trainable_parameters(ModelParameters& m, TrainMode mode);

/// Every tensor including frozen ones, for serialisation.
std::vector<ParamView> all_parameters(ModelParameters& m);

struct GradientEntry {
  std::string name;
  Mat value;
};

// Gradients for exactly the trainable tensors of a mode, same order as
// trainable_parameters().
struct GradientSet {
  std::vector<GradientEntry> entries;

  const Mat* find(const std::string& name) const;
  bool all_finite() const;
  double max_abs() const;
};

GradientSet pack_gradients(ModelParameters& grad_storage, TrainMode mode);

}  // namespace textmass
