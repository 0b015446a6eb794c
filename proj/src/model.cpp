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

#include "textmass/model.hpp"

#include <algorithm>
#include <cmath>

#include "textmass/errors.hpp"

namespace textmass {

std::string to_string(TrainMode m) {
  switch (m) {
    case TrainMode::kTMass:
      return "t-mass";
    case TrainMode::kBaseline:
      return "baseline";
    case TrainMode::kCePlusS:
      return "ablation-ce-plus-s";
  }
  return "?";
}

TrainMode parse_train_mode(const std::string& s) {
  if (s == "t-mass") return TrainMode::kTMass;
  if (s == "baseline") return TrainMode::kBaseline;
  if (s == "ablation-ce-plus-s") return TrainMode::kCePlusS;
  throw ContractViolation("unknown mode '" + s + "' (expected t-mass|baseline|ablation-ce-plus-s)");
}

double LogitScale::value() const { return std::min(std::exp(log_lambda), kMaxLambda); }

bool LogitScale::clamped() const { return std::exp(log_lambda) >= kMaxLambda; }

double default_log_lambda() { return std::log(1.0 / 0.07); }

ModelParameters make_model(const ModelConfig& cfg, std::uint64_t seed) {
  require(cfg.dim >= 1 && cfg.concept_dim >= 1 && cfg.sampled_frames >= 1, "make_model: dimensions must be positive");
  ModelParameters m;
  m.encoders = make_encoder_stack(cfg.dim, cfg.concept_dim, seed, cfg.tower_misalignment, cfg.adapters_enabled);
  m.fusion = make_fusion_parameters(cfg.dim, cfg.dropout);
  m.radius = make_radius_parameters(cfg.radius, cfg.sampled_frames, cfg.dim);
  m.logit_scale.log_lambda = default_log_lambda();
  return m;
}

ModelParameters zeros_like(const ModelParameters& m) {
  ModelParameters z = m;
  for (auto& v : all_parameters(z)) std::fill(v.data, v.data + v.size(), 0.0);
  return z;
}

namespace {

ParamView view(std::string name, ParamGroup g, Mat& x, bool decay = true, bool trainable = true) {
  return {std::move(name), g, x.data(), x.rows(), x.cols(), decay, trainable};
}

ParamView scalar_view(std::string name, ParamGroup g, double& x, bool decay, bool trainable = true) {
  return {std::move(name), g, &x, 1, 1, decay, trainable};
}

}  // namespace

std::vector<ParamView> trainable_parameters(ModelParameters& m, TrainMode mode) {
  std::vector<ParamView> out;
  if (m.encoders.adapters_enabled) {
    out.push_back(view("encoder.text_adapter", ParamGroup::kAdapter, m.encoders.text_adapter));
    out.push_back(view("encoder.frame_adapter", ParamGroup::kAdapter, m.encoders.frame_adapter));
  }
  out.push_back(view("fusion.query", ParamGroup::kHead, m.fusion.query));
  out.push_back(view("fusion.key", ParamGroup::kHead, m.fusion.key));
  out.push_back(view("fusion.value", ParamGroup::kHead, m.fusion.value));
  out.push_back(view("fusion.output", ParamGroup::kHead, m.fusion.output));
  if (mode != TrainMode::kBaseline) {
    if (m.radius.variant == RadiusVariant::kScalar && !m.radius.theta_frozen) {
      out.push_back(scalar_view("radius.theta", ParamGroup::kHead, m.radius.theta, true));
    } else if (m.radius.variant == RadiusVariant::kLinear) {
      out.push_back(view("radius.weights", ParamGroup::kHead, m.radius.weights));
    }
  }
  out.push_back(scalar_view("logit.log_lambda", ParamGroup::kHead, m.logit_scale.log_lambda, false));
  return out;
}

std::vector<ParamView> all_parameters(ModelParameters& m) {
  const bool adapters = m.encoders.adapters_enabled;
  return {
      view("encoder.text_projection", ParamGroup::kAdapter, m.encoders.text_projection, false, false),
      view("encoder.frame_projection", ParamGroup::kAdapter, m.encoders.frame_projection, false, false),
      view("encoder.text_adapter", ParamGroup::kAdapter, m.encoders.text_adapter, true, adapters),
      view("encoder.frame_adapter", ParamGroup::kAdapter, m.encoders.frame_adapter, true, adapters),
      view("fusion.query", ParamGroup::kHead, m.fusion.query),
      view("fusion.key", ParamGroup::kHead, m.fusion.key),
      view("fusion.value", ParamGroup::kHead, m.fusion.value),
      view("fusion.output", ParamGroup::kHead, m.fusion.output),
      scalar_view("radius.theta", ParamGroup::kHead, m.radius.theta, true),
      view("radius.weights", ParamGroup::kHead, m.radius.weights),
      scalar_view("logit.log_lambda", ParamGroup::kHead, m.logit_scale.log_lambda, false),
  };
}

const Mat* GradientSet::find(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return &e.value;
  }
  return nullptr;
}

bool GradientSet::all_finite() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.value.allFinite(); });
}

double GradientSet::max_abs() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.value.cwiseAbs().maxCoeff());
  return m;
}

GradientSet pack_gradients(ModelParameters& grad_storage, TrainMode mode) {
  GradientSet g;
  for (const auto& v : trainable_parameters(grad_storage, mode)) {
    g.entries.push_back({v.name, Eigen::Map<const Mat>(v.data, v.rows, v.cols)});
  }
  return g;
}

}  // namespace textmass
