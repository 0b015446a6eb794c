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

#include "textmass/dataset.hpp"
#include "textmass/model.hpp"
#include "textmass/objectives.hpp"

namespace textmass {

// A small random problem whose analytic gradients can be compared against
// central differences.
struct GradCheckCase {
  std::vector<PairRecord> batch;
  ModelParameters params;
  ObjectiveConfig objective;
  NoiseDraw noise;
};

struct GradCheckShape {
  int batch = 4;        // N
  int dim = 16;         // d
  int concept_dim = 8;  // c
  int frames = 4;       // T'
  int raw_frames = 6;   // T
};

/// Random features, random (non-identity) trainable tensors, recorded noise.
/// Dropout stays off so the loss is a deterministic function of the parameters.
GradCheckCase make_gradcheck_case(std::uint64_t seed, RadiusVariant variant, double alpha,
                                  TrainMode mode = TrainMode::kTMass, const GradCheckShape& shape = {});

struct GradCheckEntry {
  std::string name;
  Eigen::Index index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
  bool ok = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;  // over entries judged by the relative criterion
  double max_abs_error = 0.0;  // over entries judged by the absolute criterion
  bool passed = true;
};

/// Compares backward() with finite_diff_gradient() on every trainable scalar.
/// An entry passes when |a - n| / max(|a|, |n|) <= rel_tol, or, if both
/// magnitudes are below small_grad, when |a - n| <= abs_tol.
GradCheckReport gradient_check(const GradCheckCase& gc, double h = 1e-4, double rel_tol = 1e-4,
                               double abs_tol = 1e-6, double small_grad = 1e-3);

}  // namespace textmass
