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

#include "textmass/objectives.hpp"

#include <cmath>
#include <string>

#include "textmass/errors.hpp"

namespace textmass {

namespace {

// Row-wise log-sum-exp of scale * m, with max subtraction.
Vec row_logsumexp(const Mat& m, double scale) {
  Vec out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const Vec z = m.row(i).transpose() * scale;
    const double mx = z.maxCoeff();
    out[i] = mx + std::log((z.array() - mx).exp().sum());
  }
  return out;
}

Mat row_softmax(const Mat& m, double scale) {
  Mat p(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) p.row(i) = softmax(m.row(i).transpose(), scale).transpose();
  return p;
}

void check_sims(const Mat& sims, double lambda) {
  require(sims.rows() >= 1 && sims.rows() == sims.cols(), "symmetric_ce: need a non-empty square matrix");
  require(sims.allFinite(), "symmetric_ce: non-finite similarity entries");
  require(std::isfinite(lambda) && lambda > 0.0, "symmetric_ce: logit scale must be positive");
}

// Accumulates coef * d cos(a, b) / d{a, b}; zero when the clamp is active.
void cosine_backward(const Vec& a, const Vec& b, double coef, Vec& ga, Vec& gb) {
  if (coef == 0.0) return;
  const double na = a.norm();
  const double nb = b.norm();
  const double n = na * nb + kCosineGuard;
  const double dot = a.dot(b);
  const double raw = dot / n;
  if (raw > 1.0 || raw < -1.0) return;
  ga += coef * (b / n - (dot * nb / (na * n * n)) * a);
  gb += coef * (a / n - (dot * na / (nb * n * n)) * b);
}

// Gradient through y = x / |x| given |x|.
Vec normalize_backward(const Vec& y, double norm, const Vec& gy) { return (gy - y * y.dot(gy)) / norm; }

}  // namespace

CeLoss symmetric_ce(const Mat& sims, double lambda) {
  check_sims(sims, lambda);
  const auto n = static_cast<double>(sims.rows());
  const Vec row_lse = row_logsumexp(sims, lambda);
  const Vec col_lse = row_logsumexp(sims.transpose(), lambda);
  CeLoss out;
  for (Eigen::Index i = 0; i < sims.rows(); ++i) {
    out.t2v += row_lse[i] - sims(i, i) * lambda;
    out.v2t += col_lse[i] - sims(i, i) * lambda;
  }
  out.t2v /= n;
  out.v2t /= n;
  out.ce = 0.5 * (out.t2v + out.v2t);
  return out;
}

CeGradient symmetric_ce_gradient(const Mat& sims, double lambda) {
  check_sims(sims, lambda);
  const Eigen::Index n = sims.rows();
  const Mat p = row_softmax(sims, lambda);                            // rows over videos
  const Mat q = row_softmax(sims.transpose(), lambda).transpose();    // columns over texts
  CeGradient g;
  g.d_sims = (p + q) * (0.5 * lambda / static_cast<double>(n));
  g.d_sims.diagonal().array() -= lambda / static_cast<double>(n);
  double dl = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    dl += p.row(i).dot(sims.row(i)) - sims(i, i);
    dl += q.col(i).dot(sims.col(i)) - sims(i, i);
  }
  g.d_lambda = 0.5 * dl / static_cast<double>(n);
  return g;
}

NoiseDraw draw_noise(SeededRng& rng, std::size_t batch_size, Eigen::Index d, const ObjectiveConfig& cfg,
                     double dropout_rate) {
  require(cfg.samples_per_text >= 1, "draw_noise: samples per text must be >= 1");
  NoiseDraw noise;
  if (cfg.mode != TrainMode::kBaseline) {
    noise.eps.resize(static_cast<std::size_t>(cfg.samples_per_text));
    for (auto& row : noise.eps) {
      for (std::size_t i = 0; i < batch_size; ++i) row.push_back(sample_gaussian(rng, d));
    }
  }
  if (cfg.training && dropout_rate > 0.0) {
    for (std::size_t k = 0; k < batch_size * batch_size; ++k) {
      noise.dropout_masks.push_back(draw_dropout_mask(rng, d, dropout_rate));
    }
  }
  return noise;
}

BatchState encode_batch(Batch batch, const ModelParameters& params, bool with_radius, const NoiseDraw& noise) {
  require(!batch.empty(), "encode_batch: empty batch");
  const auto& enc = params.encoders;
  const auto frames_per_video = static_cast<std::size_t>(params.radius.frames());
  BatchState st;
  st.n = batch.size();
  const std::size_t n = st.n;
  require(noise.dropout_masks.empty() || noise.dropout_masks.size() == n * n,
          "encode_batch: dropout masks do not match the batch");

  for (const auto& rec : batch) {
    st.text_inputs.push_back(enc.text_projection * rec.text.features);
    st.texts.push_back(encode_with(rec.text.features, enc.text_projection, enc.text_adapter, enc.adapters_enabled));

    const auto idx = sample_frame_indices(rec.video.frames.size(), frames_per_video);
    std::vector<Vec> inputs;
    std::vector<EncodedVector> codes;
    FrameEmbeddingSet set;
    set.frames.resize(enc.dim(), static_cast<Eigen::Index>(frames_per_video));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const Vec& raw = rec.video.frames[idx[k]];
      inputs.push_back(enc.frame_projection * raw);
      codes.push_back(encode_with(raw, enc.frame_projection, enc.frame_adapter, enc.adapters_enabled));
      set.frames.col(static_cast<Eigen::Index>(k)) = codes.back().embedding;
    }
    st.frame_inputs.push_back(std::move(inputs));
    st.frame_codes.push_back(std::move(codes));
    st.projections.push_back(project_frames(set, params.fusion));
    st.frames.push_back(std::move(set));
  }

  st.fusion.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const Vec* mask = noise.dropout_masks.empty() ? nullptr : &noise.dropout_masks[i * n + j];
      st.fusion.push_back(fuse_traced(st.projections[j], st.text(i), params.fusion, mask));
    }
  }

  if (with_radius) {
    for (std::size_t i = 0; i < n; ++i) {
      st.similarities.push_back(frame_similarities(st.text(i), st.frames[i]));
      st.radii.push_back(radius(st.similarities.back(), params.radius));
    }
  }
  return st;
}

Mat similarity_matrix(const BatchState& state, const std::vector<Vec>& rows) {
  require(rows.size() == state.n, "similarity_matrix: need one row embedding per text");
  const auto n = static_cast<Eigen::Index>(state.n);
  Mat m(n, n);
  for (std::size_t i = 0; i < state.n; ++i) {
    for (std::size_t j = 0; j < state.n; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cosine_similarity(rows[i], state.video(i, j));
    }
  }
  return m;
}

std::vector<Vec> stochastic_texts(const BatchState& state, const std::vector<Vec>& eps) {
  require(eps.size() == state.n && state.radii.size() == state.n, "stochastic_texts: missing noise or radius");
  std::vector<Vec> out;
  for (std::size_t i = 0; i < state.n; ++i) out.push_back(apply_text_mass(state.text(i), state.radii[i], eps[i]));
  return out;
}

SupportTexts support_texts(const BatchState& state) {
  require(state.radii.size() == state.n, "support_texts: radius not computed");
  SupportTexts out;
  for (std::size_t i = 0; i < state.n; ++i) {
    try {
      out.vectors.push_back(support_text(state.text(i), state.video(i, i), state.radii[i]));
      out.kept.push_back(i);
    } catch (const DegenerateGeometry&) {
      // pair excluded from the support matrix
    }
  }
  return out;
}

namespace {

Mat support_matrix(const BatchState& state, const SupportTexts& sup) {
  const auto m = static_cast<Eigen::Index>(sup.kept.size());
  Mat sims(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      sims(a, b) = cosine_similarity(sup.vectors[static_cast<std::size_t>(a)],
                                     state.video(sup.kept[static_cast<std::size_t>(a)], sup.kept[static_cast<std::size_t>(b)]));
    }
  }
  return sims;
}

}  // namespace

double support_loss_from(const BatchState& state, const SupportTexts& sup, double lambda) {
  if (sup.kept.empty()) throw DegenerateBatch("support_loss: every pair in the batch is degenerate");
  return symmetric_ce(support_matrix(state, sup), lambda).ce;
}

double stochastic_loss(Batch batch, const ModelParameters& params, SeededRng& rng) {
  ObjectiveConfig cfg;
  const NoiseDraw noise = draw_noise(rng, batch.size(), params.encoders.dim(), cfg, 0.0);
  const BatchState st = encode_batch(batch, params, true, noise);
  return symmetric_ce(similarity_matrix(st, stochastic_texts(st, noise.eps[0])), params.logit_scale).ce;
}

double support_loss(Batch batch, const ModelParameters& params) {
  const BatchState st = encode_batch(batch, params, true, NoiseDraw{});
  return support_loss_from(st, support_texts(st), params.logit_scale.value());
}

LossBreakdown total_loss(Batch batch, const ModelParameters& params, double alpha, SeededRng& rng) {
  require(alpha >= 0.0, "total_loss: alpha must be >= 0");
  ObjectiveConfig cfg;
  cfg.alpha = alpha;
  const NoiseDraw noise = draw_noise(rng, batch.size(), params.encoders.dim(), cfg, 0.0);
  return evaluate_objective(batch, params, cfg, noise);
}

namespace {

LossBreakdown losses_from_state(const BatchState& st, const ModelParameters& params, const ObjectiveConfig& cfg,
                                const NoiseDraw& noise) {
  require(cfg.alpha >= 0.0, "objective: alpha must be >= 0");
  const double lambda = params.logit_scale.value();
  LossBreakdown lb;
  lb.alpha = cfg.alpha;

  std::vector<Vec> texts;
  for (std::size_t i = 0; i < st.n; ++i) texts.push_back(st.text(i));
  const CeLoss det = symmetric_ce(similarity_matrix(st, texts), lambda);
  lb.l_t2v = det.t2v;
  lb.l_v2t = det.v2t;
  lb.l_ce = det.ce;

  if (cfg.mode != TrainMode::kBaseline) {
    require(!noise.eps.empty(), "objective: stochastic modes need recorded noise");
    double sum = 0.0;
    for (const auto& eps : noise.eps) sum += symmetric_ce(similarity_matrix(st, stochastic_texts(st, eps)), lambda).ce;
    lb.l_s = sum / static_cast<double>(noise.eps.size());
  }
  if (cfg.mode == TrainMode::kTMass) {
    const SupportTexts sup = support_texts(st);
    lb.support_pairs = static_cast<int>(sup.kept.size());
    if (!sup.kept.empty()) {
      lb.l_sup = support_loss_from(st, sup, lambda);
    } else if (cfg.alpha > 0.0) {
      throw DegenerateBatch("support_loss: every pair in the batch is degenerate");
    }
  }

  switch (cfg.mode) {
    case TrainMode::kTMass:
      lb.l_total = lb.l_s + cfg.alpha * lb.l_sup;
      break;
    case TrainMode::kBaseline:
      lb.l_total = lb.l_ce;
      break;
    case TrainMode::kCePlusS:
      lb.l_total = lb.l_ce + lb.l_s;
      break;
  }
  return lb;
}

}  // namespace

LossBreakdown evaluate_objective(Batch batch, const ModelParameters& params, const ObjectiveConfig& cfg,
                                 const NoiseDraw& noise) {
  const BatchState st = encode_batch(batch, params, cfg.mode != TrainMode::kBaseline, noise);
  return losses_from_state(st, params, cfg, noise);
}

BackwardResult backward(Batch batch, const ModelParameters& params, const ObjectiveConfig& cfg,
                        const NoiseDraw& noise) {
  const bool stochastic = cfg.mode != TrainMode::kBaseline;
  const BatchState st = encode_batch(batch, params, stochastic, noise);
  BackwardResult result;
  result.loss = losses_from_state(st, params, cfg, noise);

  const std::size_t n = st.n;
  const Eigen::Index d = params.encoders.dim();
  const Eigen::Index tf = params.radius.frames();
  const double lambda = params.logit_scale.value();

  ModelParameters g = zeros_like(params);
  std::vector<Vec> gt(n, Vec::Zero(d));
  std::vector<Vec> gr(n, Vec::Zero(d));
  std::vector<Vec> gv(n * n, Vec::Zero(d));
  std::vector<Mat> gf(n, Mat::Zero(d, tf));
  double g_lambda = 0.0;

  // d loss / d (row embeddings, fused videos) for one contrastive matrix.
  auto matrix_backward = [&](const Mat& sims, double weight, const std::vector<Vec>& rows,
                             const std::vector<std::size_t>& index, std::vector<Vec>& g_rows) {
    const CeGradient cg = symmetric_ce_gradient(sims, lambda);
    g_lambda += weight * cg.d_lambda;
    for (std::size_t a = 0; a < index.size(); ++a) {
      for (std::size_t b = 0; b < index.size(); ++b) {
        const std::size_t i = index[a];
        const std::size_t j = index[b];
        cosine_backward(rows[a], st.video(i, j), weight * cg.d_sims(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)),
                        g_rows[a], gv[i * n + j]);
      }
    }
  };

  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;

  if (cfg.mode == TrainMode::kBaseline || cfg.mode == TrainMode::kCePlusS) {
    std::vector<Vec> texts;
    for (std::size_t i = 0; i < n; ++i) texts.push_back(st.text(i));
    std::vector<Vec> g_rows(n, Vec::Zero(d));
    matrix_backward(similarity_matrix(st, texts), 1.0, texts, all, g_rows);
    for (std::size_t i = 0; i < n; ++i) gt[i] += g_rows[i];
  }

  if (stochastic) {
    const double weight = 1.0 / static_cast<double>(noise.eps.size());
    for (const auto& eps : noise.eps) {
      const auto ts = stochastic_texts(st, eps);
      std::vector<Vec> g_rows(n, Vec::Zero(d));
      matrix_backward(similarity_matrix(st, ts), weight, ts, all, g_rows);
      for (std::size_t i = 0; i < n; ++i) {
        gt[i] += g_rows[i];
        gr[i] += g_rows[i].cwiseProduct(eps[i]);
      }
    }
  }

  if (cfg.mode == TrainMode::kTMass && cfg.alpha != 0.0) {
    const SupportTexts sup = support_texts(st);
    if (!sup.kept.empty()) {
      std::vector<Vec> g_rows(sup.kept.size(), Vec::Zero(d));
      matrix_backward(support_matrix(st, sup), cfg.alpha, sup.vectors, sup.kept, g_rows);
      for (std::size_t a = 0; a < sup.kept.size(); ++a) {
        const std::size_t i = sup.kept[a];
        const Vec delta = st.video(i, i) - st.text(i);
        const double dist = delta.norm();
        const Vec dir = delta / dist;
        gr[i] += g_rows[a].cwiseProduct(dir);
        const Vec g_dir = g_rows[a].cwiseProduct(st.radii[i]);
        const Vec g_delta = (g_dir - dir * dir.dot(g_dir)) / dist;
        gv[i * n + i] += g_delta;
        gt[i] += g_rows[a] - g_delta;
      }
    }
  }

  // radius: R = exp(z) with z from the frame similarities S of the paired video.
  if (stochastic) {
    for (std::size_t i = 0; i < n; ++i) {
      const Vec gz = gr[i].cwiseProduct(st.radii[i]);
      const Vec& s = st.similarities[i];
      Vec gs;
      switch (params.radius.variant) {
        case RadiusVariant::kLinear:
          g.radius.weights += s * gz.transpose();
          gs = params.radius.weights * gz;
          break;
        case RadiusVariant::kScalar:
          g.radius.theta += s.mean() * gz.sum();
          gs = Vec::Constant(tf, params.radius.theta * gz.sum() / static_cast<double>(tf));
          break;
        case RadiusVariant::kFixedMean:
          gs = Vec::Constant(tf, gz.sum() / static_cast<double>(tf));
          break;
      }
      for (Eigen::Index k = 0; k < tf; ++k) {
        Vec gfk = Vec::Zero(d);
        cosine_backward(st.text(i), st.frames[i].frames.col(k), gs[k], gt[i], gfk);
        gf[i].col(k) += gfk;
      }
    }
  }

  // fusion grid
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  const auto& fp = params.fusion;
  std::vector<Mat> g_values(n, Mat::Zero(d, tf));
  std::vector<Mat> g_keys(n, Mat::Zero(d, tf));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const FusionTrace& tr = st.fusion[i * n + j];
      const Vec go = normalize_backward(tr.video, tr.out_norm, gv[i * n + j]);
      g.fusion.output += go * tr.dropped.transpose();
      Vec gp = fp.output.transpose() * go;
      if (!noise.dropout_masks.empty()) gp = gp.cwiseProduct(noise.dropout_masks[i * n + j]);
      const Vec gw = st.projections[j].values.transpose() * gp;
      g_values[j] += gp * tr.weights.transpose();
      const Vec ga = tr.weights.cwiseProduct((gw.array() - tr.weights.dot(gw)).matrix()) * inv_sqrt_d;
      const Vec gq = st.projections[j].keys * ga;
      g_keys[j] += tr.query * ga.transpose();
      g.fusion.query += gq * st.text(i).transpose();
      gt[i] += fp.query.transpose() * gq;
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    const Mat& f = st.frames[j].frames;
    g.fusion.value += g_values[j] * f.transpose();
    g.fusion.key += g_keys[j] * f.transpose();
    gf[j] += fp.value.transpose() * g_values[j] + fp.key.transpose() * g_keys[j];
  }

  // encoders
  if (params.encoders.adapters_enabled) {
    for (std::size_t j = 0; j < n; ++j) {
      for (Eigen::Index k = 0; k < tf; ++k) {
        const auto& code = st.frame_codes[j][static_cast<std::size_t>(k)];
        const Vec graw = normalize_backward(code.embedding, code.norm, gf[j].col(k));
        g.encoders.frame_adapter += graw * st.frame_inputs[j][static_cast<std::size_t>(k)].transpose();
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const Vec graw = normalize_backward(st.texts[i].embedding, st.texts[i].norm, gt[i]);
      g.encoders.text_adapter += graw * st.text_inputs[i].transpose();
    }
  }

  g.logit_scale.log_lambda = params.logit_scale.clamped() ? 0.0 : g_lambda * lambda;
  result.gradients = pack_gradients(g, cfg.mode);
  return result;
}

}  // namespace textmass
