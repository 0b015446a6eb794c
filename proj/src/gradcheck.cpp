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

#include "textmass/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "textmass/core_math.hpp"
#include "textmass/errors.hpp"

namespace textmass {

namespace {

void jitter(Mat& m, SeededRng& rng, double scale) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += scale * rng.next_gaussian();
}

}  // namespace

GradCheckCase make_gradcheck_case(std::uint64_t seed, RadiusVariant variant, double alpha, TrainMode mode,
                                  const GradCheckShape& shape) {
  GradCheckCase gc;
  SeededRng rng(seed, substream({0x62AD, 0}));
  for (int i = 0; i < shape.batch; ++i) {
    PairRecord r;
    r.pair_id = i;
    r.text.id = i;
    r.video.id = i;
    r.text.features = sample_gaussian(rng, shape.concept_dim);
    for (int f = 0; f < shape.raw_frames; ++f) {
      // frames share part of the text so similarities are not all near zero
      r.video.frames.push_back(0.6 * r.text.features + sample_gaussian(rng, shape.concept_dim));
    }
    gc.batch.push_back(std::move(r));
  }

  ModelConfig mc;
  mc.dim = shape.dim;
  mc.concept_dim = shape.concept_dim;
  mc.sampled_frames = shape.frames;
  mc.radius = variant;
  mc.dropout = 0.0;
  gc.params = make_model(mc, seed);
  const double inv = 1.0 / std::sqrt(static_cast<double>(shape.dim));
  jitter(gc.params.encoders.text_adapter, rng, 0.3 * inv);
  jitter(gc.params.encoders.frame_adapter, rng, 0.3 * inv);
  jitter(gc.params.fusion.query, rng, 2.0 * inv);
  jitter(gc.params.fusion.key, rng, 2.0 * inv);
  jitter(gc.params.fusion.value, rng, 0.5 * inv);
  jitter(gc.params.fusion.output, rng, 0.5 * inv);
  jitter(gc.params.radius.weights, rng, 0.3);
  gc.params.radius.theta = 2.0 * rng.next_uniform() - 1.0;
  gc.params.logit_scale.log_lambda = std::log(2.0 + 8.0 * rng.next_uniform());

  gc.objective.mode = mode;
  gc.objective.alpha = alpha;
  gc.objective.training = false;
  gc.noise = draw_noise(rng, gc.batch.size(), shape.dim, gc.objective, 0.0);
  return gc;
}

GradCheckReport gradient_check(const GradCheckCase& gc, double h, double rel_tol, double abs_tol, double small_grad) {
  const BackwardResult analytic = backward(gc.batch, gc.params, gc.objective, gc.noise);
  GradCheckReport report;

  ModelParameters probe = gc.params;
  const auto views = trainable_parameters(probe, gc.objective.mode);
  require(views.size() == analytic.gradients.entries.size(), "gradient_check: gradient set mismatch");
  for (std::size_t k = 0; k < views.size(); ++k) {
    const ParamView& v = views[k];
    const Eigen::Map<Vec> flat(v.data, v.size());
    const Vec x0 = flat;
    auto loss_at = [&](const Vec& x) {
      Eigen::Map<Vec>(v.data, v.size()) = x;
      const double l = evaluate_objective(gc.batch, probe, gc.objective, gc.noise).l_total;
      Eigen::Map<Vec>(v.data, v.size()) = x0;
      return l;
    };
    const Vec numeric = finite_diff_gradient(loss_at, x0, h);
    const Mat& a = analytic.gradients.entries[k].value;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      GradCheckEntry e;
      e.name = v.name;
      e.index = i;
      e.analytic = a.data()[i];
      e.numeric = numeric[i];
      const double diff = std::abs(e.analytic - e.numeric);
      const double scale = std::max(std::abs(e.analytic), std::abs(e.numeric));
      if (scale < small_grad) {
        e.rel_error = scale > 0.0 ? diff / scale : 0.0;
        e.ok = diff <= abs_tol;
        report.max_abs_error = std::max(report.max_abs_error, diff);
      } else {
        e.rel_error = diff / scale;
        e.ok = e.rel_error <= rel_tol;
        report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
      }
      report.passed = report.passed && e.ok;
      report.entries.push_back(e);
    }
  }
  return report;
}

}  // namespace textmass
