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


// Runs the ten acceptance criteria and prints one PASS/FAIL line per
// criterion. Exit status is non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "textmass/errors.hpp"
#include "textmass/gradcheck.hpp"
#include "textmass/objectives.hpp"
#include "textmass/workbench.hpp"

using namespace textmass;
namespace fs = std::filesystem;

namespace {

// Tolerances, pinned.
constexpr double kGradRel = 1e-4;
constexpr double kGradAbs = 1e-6;
constexpr double kGradSmall = 1e-3;
constexpr double kGradSeconds = 60.0;
constexpr double kClosedForm = 1e-6;
constexpr int kMonteCarlo = 100000;
constexpr double kStdRel = 0.02;
constexpr double kSurface = 1e-9;
constexpr double kRecompute = 1e-9;
constexpr double kCsvRounding = 5e-7 + 1e-12;  // six printed decimals
constexpr double kImprovementSeconds = 300.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path work_dir() {
  const fs::path p = fs::temp_directory_path() / "textmass_acceptance";
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

RunConfig synthetic_config() { return run_config_from(KeyValues::load(TEXTMASS_SYNTHETIC_CONFIG)); }

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "textmass");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::fprintf(stderr, "textmass %s failed: %s\n", args[1].c_str(), err.str().c_str());
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(slurp(p));
  std::string line;
  while (std::getline(ss, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
  return s;
}

// ---- 1 -----------------------------------------------------------------------

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  int configs = 0, failed = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    for (auto v : {RadiusVariant::kFixedMean, RadiusVariant::kScalar, RadiusVariant::kLinear}) {
      for (double alpha : {0.0, 1.2}) {
        const GradCheckReport r =
            gradient_check(make_gradcheck_case(seed, v, alpha), 1e-4, kGradRel, kGradAbs, kGradSmall);
        worst = std::max(worst, r.max_rel_error);
        failed += r.passed ? 0 : 1;
        ++configs;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {failed == 0 && configs >= 20 && secs <= kGradSeconds,
          std::to_string(configs) + " configs, max rel err " + fmt("%.2e", worst) + " (tol 1e-4, abs 1e-6 below 1e-3), " +
              fmt("%.1f", secs) + " s (limit 60 s)"};
}

// ---- 2 -----------------------------------------------------------------------

Outcome closed_form_loss() {
  const double two = symmetric_ce(Mat::Identity(2, 2), 1.0).ce;
  const double one = symmetric_ce(Mat::Constant(1, 1, 0.4), 1.0).ce;
  const Mat perfect = Mat::Identity(2, 2);
  const double l1 = symmetric_ce(perfect, 1.0).ce, l5 = symmetric_ce(perfect, 5.0).ce,
               l20 = symmetric_ce(perfect, 20.0).ce;
  const double err = std::abs(two - std::log(1.0 + std::exp(-1.0)));
  return {err <= kClosedForm && one == 0.0 && l1 > l5 && l5 > l20,
          "N=2 err " + fmt("%.1e", err) + " (tol 1e-6), N=1 loss " + fmt("%g", one) + ", l(1) > l(5) > l(20): " +
              fmt("%.4f", l1) + " > " + fmt("%.4f", l5) + " > " + fmt("%.2e", l20)};
}

// ---- 3 -----------------------------------------------------------------------

Outcome reparameterization() {
  SeededRng setup(3, 0);
  double worst_mean = 0.0, worst_std = 0.0;
  bool ok = true;
  for (int config = 0; config < 3; ++config) {
    const Eigen::Index d = 8;
    const Vec t = oracle::normalized(sample_gaussian(setup, d));
    const Vec r = (0.7 * sample_gaussian(setup, d)).array().exp().matrix();
    SeededRng rng(3, 1 + static_cast<std::uint64_t>(config));
    Vec sum = Vec::Zero(d), sq = Vec::Zero(d);
    for (int i = 0; i < kMonteCarlo; ++i) {
      const Vec x = sample_text_mass(t, r, rng);
      sum += x;
      sq += x.cwiseProduct(x);
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      const double mean = sum[j] / kMonteCarlo;
      const double sd = std::sqrt(sq[j] / kMonteCarlo - mean * mean);
      const double mean_err = std::abs(mean - t[j]) / (r[j] / std::sqrt(double(kMonteCarlo)));
      const double std_err = std::abs(sd - r[j]) / r[j];
      worst_mean = std::max(worst_mean, mean_err);
      worst_std = std::max(worst_std, std_err);
      ok = ok && mean_err <= 5.0 && std_err <= kStdRel;
    }
  }
  return {ok, "3 configs x 1e5 samples, worst mean dev " + fmt("%.2f", worst_mean) + " R/sqrt(n) (tol 5), worst std dev " +
                  fmt("%.3f", 100.0 * worst_std) + "% (tol 2%)"};
}

// ---- 4 -----------------------------------------------------------------------

Outcome support_geometry() {
  SeededRng rng(4, 0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.next_u64() % 31);
    const Vec t = oracle::normalized(sample_gaussian(rng, d));
    const Vec v = oracle::normalized(sample_gaussian(rng, d));
    const Vec r = sample_gaussian(rng, d).array().exp().matrix();
    const Vec dir = (support_text(t, v, r) - t).cwiseQuotient(r);
    const Vec want = (v - t) / oracle::norm(v - t);
    worst = std::max(worst, (dir - want).cwiseAbs().maxCoeff());
  }
  bool raised = false;
  try {
    support_text(Vec::Unit(4, 2), Vec::Unit(4, 2), Vec::Ones(4));
  } catch (const DegenerateGeometry&) {
    raised = true;
  }
  return {worst <= kSurface && raised, "100 instances, worst componentwise err " + fmt("%.1e", worst) +
                                           " (tol 1e-9), v = t raises DegenerateGeometry: " + (raised ? "yes" : "no")};
}

// ---- 5 -----------------------------------------------------------------------

Outcome metric_oracle() {
  SeededRng rng(5, 0);
  int mismatches = 0, non_monotone = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Mat s(16, 16);
    for (Eigen::Index i = 0; i < 16; ++i) {
      const bool tied = (i + trial) % 3 == 0;
      for (Eigen::Index j = 0; j < 16; ++j) s(i, j) = tied ? std::floor(3.0 * rng.next_uniform()) : rng.next_gaussian();
    }
    std::vector<int> rel(16);
    for (auto& r : rel) r = static_cast<int>(rng.next_u64() % 16);
    const RankResult got = rank_metrics(s, rel);
    const auto want = oracle::sorted_ranks(s, rel);
    const auto& m = got.metrics;
    const bool same = got.ranks == want && m.r1 == oracle::recall_at(want, 1) && m.r5 == oracle::recall_at(want, 5) &&
                      m.r10 == oracle::recall_at(want, 10) && m.mdr == oracle::median_rank(want) &&
                      m.mnr == oracle::mean_rank(want);
    mismatches += same ? 0 : 1;
    non_monotone += (m.r1 <= m.r5 && m.r5 <= m.r10) ? 0 : 1;
  }
  return {mismatches == 0 && non_monotone == 0, "200 matrices (16x16, tied rows included): " +
                                                    std::to_string(mismatches) + " oracle mismatches, " +
                                                    std::to_string(non_monotone) + " R@K monotonicity violations"};
}

// ---- shared training for 6 and 7 -----------------------------------------------

struct SeedRun {
  std::uint64_t seed = 0;
  double r1_tmass = 0.0;
  double r1_baseline = 0.0;
  Checkpoint tmass;
};

struct Synthetic {
  RunConfig rc;
  std::vector<PairRecord> train;
  std::vector<PairRecord> test;
  std::vector<SeedRun> runs;
  double seconds = 0.0;
};

Synthetic run_synthetic() {
  Synthetic s;
  s.rc = synthetic_config();
  const auto all = load_records(s.rc);
  s.train = select_split(all, Split::kTrain);
  s.test = select_split(all, Split::kTest);
  const auto t0 = Clock::now();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SeedRun run;
    run.seed = seed;
    TrainConfig cfg = s.rc.train;
    cfg.seed = seed;
    cfg.mode = TrainMode::kTMass;
    run.tmass = train(cfg, s.train).checkpoint;
    run.r1_tmass = evaluate_model(s.test, run.tmass.params, cfg.sampling, true, seed).t2v.r1;
    cfg.mode = TrainMode::kBaseline;
    const Checkpoint base = train(cfg, s.train).checkpoint;
    run.r1_baseline = evaluate_model(s.test, base.params, cfg.sampling, false, seed).t2v.r1;
    s.runs.push_back(std::move(run));
  }
  s.seconds = seconds_since(t0);
  return s;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---- 6 -----------------------------------------------------------------------

Outcome best_of_m(const Synthetic& s, const fs::path& work) {
  const Checkpoint& ck = s.runs.front().tmass;
  const EncodedSet set = encode_set(s.test, ck.params);
  std::vector<Mat> mats;
  std::vector<EvaluationResult> evals;
  for (int m : {5, 10, 20}) {
    SamplingConfig cfg = s.rc.train.sampling;
    cfg.trials = m;
    mats.push_back(inference_similarity_matrix(set, ck.params, cfg, true, ck.config.seed));
    evals.push_back(evaluate_pairs(mats.back()));
  }
  bool entrywise = true, recall = true;
  for (std::size_t k = 1; k < mats.size(); ++k) {
    entrywise = entrywise && ((mats[k] - mats[k - 1]).array() >= 0.0).all();
    for (auto dir : {&EvaluationResult::t2v, &EvaluationResult::v2t}) {
      const auto& a = evals[k - 1].*dir;
      const auto& b = evals[k].*dir;
      recall = recall && a.r1 <= b.r1 && a.r5 <= b.r5 && a.r10 <= b.r10;
    }
  }
  std::string recalls;
  for (std::size_t k = 0; k < evals.size(); ++k)
    recalls += (k ? " -> " : "") + fmt("%.2f", evals[k].t2v.r1) + "/" + fmt("%.2f", evals[k].t2v.r5) + "/" +
               fmt("%.2f", evals[k].t2v.r10);

  bool pattern = false;
  std::string sweep = "sweep-trials failed";
  if (cli({"sweep-trials", "--config", TEXTMASS_SYNTHETIC_CONFIG, "--out", (work / "c6").string()}) == 0) {
    const auto rows = read_csv(work / "c6" / "sweep-trials-001" / "metrics.csv");
    std::map<std::string, double> r1;
    for (std::size_t i = 1; i < rows.size(); ++i) r1[rows[i][0]] = std::stod(rows[i][3]);
    pattern = r1.size() == 4 && r1["M=off"] <= r1["M=5"] && r1["M=off"] <= r1["M=10"] && r1["M=off"] <= r1["M=20"];
    sweep = "sweep R@1 off/5/10/20 = " + fmt("%.2f", r1["M=off"]) + "/" + fmt("%.2f", r1["M=5"]) + "/" +
            fmt("%.2f", r1["M=10"]) + "/" + fmt("%.2f", r1["M=20"]);
  }
  return {entrywise && recall && pattern,
          std::string("matrix non-decreasing: ") + (entrywise ? "yes" : "no") + ", t2v R@1/5/10 over M=5->10->20: " +
              recalls + " (non-decreasing: " + (recall ? "yes" : "no") + "), " + sweep + " (off <= sampled: " +
              (pattern ? "yes" : "no") + ")"};
}

// ---- 7 -----------------------------------------------------------------------

Outcome synthetic_improvement(const Synthetic& s) {
  std::vector<double> tm, bl, gain;
  std::string per_seed;
  for (const auto& r : s.runs) {
    tm.push_back(r.r1_tmass);
    bl.push_back(r.r1_baseline);
    gain.push_back(r.r1_tmass - r.r1_baseline);
    per_seed += (per_seed.empty() ? "" : " ") + fmt("%.1f", r.r1_tmass) + "/" + fmt("%.1f", r.r1_baseline);
  }
  const double mt = median(tm), mb = median(bl), mg = median(gain);
  return {mt >= mb && mg > 0.0 && s.seconds <= kImprovementSeconds,
          "median R@1 t-mass " + fmt("%.2f", mt) + " vs baseline " + fmt("%.2f", mb) + ", median gain " +
              fmt("%+.2f", mg) + " (need >= and > 0); per seed t-mass/baseline " + per_seed + "; " +
              fmt("%.1f", s.seconds) + " s (limit 300 s)"};
}

// ---- 8 -----------------------------------------------------------------------

Outcome ablation_consistency(const Synthetic& s, const fs::path& work) {
  TrainConfig fm = s.rc.train;
  fm.model.radius = RadiusVariant::kFixedMean;
  TrainConfig sc = s.rc.train;
  sc.model.radius = RadiusVariant::kScalar;
  sc.theta_init = 1.0;
  sc.theta_frozen = true;
  bool identical = true;
  for (std::uint64_t seed : {0u, 1u}) {
    fm.seed = sc.seed = seed;
    const Checkpoint a = train(fm, s.train).checkpoint;
    const Checkpoint b = train(sc, s.train).checkpoint;
    const auto ea = evaluate_model(s.test, a.params, fm.sampling, true, seed);
    const auto eb = evaluate_model(s.test, b.params, sc.sampling, true, seed);
    std::ostringstream x, y;
    write_metrics_csv(x, {ea.t2v, ea.v2t});
    write_metrics_csv(y, {eb.t2v, eb.v2t});
    identical = identical && x.str() == y.str() && ea.t2v.mnr == eb.t2v.mnr && ea.v2t.mnr == eb.v2t.mnr &&
                ea.t2v.r1 == eb.t2v.r1 && ea.v2t.r1 == eb.v2t.r1;
  }

  bool table = false;
  std::vector<std::string> seen;
  if (cli({"ablate-radius", "--config", TEXTMASS_SYNTHETIC_CONFIG, "--out", (work / "c8").string()}) == 0) {
    const auto rows = read_csv(work / "c8" / "ablate-radius-001" / "metrics.csv");
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (std::find(seen.begin(), seen.end(), rows[i][0]) == seen.end()) seen.push_back(rows[i][0]);
    table = seen == std::vector<std::string>{"baseline", "fixed-mean", "scalar", "linear"};
  }
  return {identical && table, std::string("fixed-mean vs scalar(theta=1, frozen) metrics bit-identical on 2 seeds: ") +
                                  (identical ? "yes" : "no") + ", ablate-radius configs: " + join(seen)};
}

// ---- 9 -----------------------------------------------------------------------

Outcome determinism(const Synthetic& s, const fs::path& work) {
  bool same = true;
  for (const char* root : {"c9a", "c9b"}) {
    const fs::path out = work / root;
    if (cli({"train", "--config", TEXTMASS_SYNTHETIC_CONFIG, "--out", out.string(), "--seed", "7"}) != 0) return {};
    std::ofstream(out / "eval.conf") << slurp(TEXTMASS_SYNTHETIC_CONFIG) << "checkpoint = "
                                     << (out / "train-001" / "checkpoint.tmck").string() << "\n";
    if (cli({"eval", "--config", (out / "eval.conf").string(), "--out", out.string()}) != 0) return {};
  }
  const fs::path a = work / "c9a", b = work / "c9b";
  for (const char* f : {"train-001/metrics.csv", "train-001/checkpoint.tmck", "train-001/epochs.csv",
                        "train-001/config.txt", "eval-001/metrics.csv"}) {
    same = same && slurp(a / f) == slurp(b / f) && !slurp(a / f).empty();
  }

  TrainConfig cfg = s.rc.train;
  cfg.seed = 7;
  const Checkpoint full = train(cfg, s.train).checkpoint;
  TrainOptions first;
  first.stop_after_epochs = 2;
  save_checkpoint(work / "c9_partial.tmck", train(cfg, s.train, first).checkpoint);
  const Checkpoint partial = load_checkpoint(work / "c9_partial.tmck");
  TrainOptions rest;
  rest.resume = &partial;
  const bool resume = encode_checkpoint(train(cfg, s.train, rest).checkpoint) == encode_checkpoint(full);
  return {same && resume, std::string("two train+eval invocations byte-identical (metrics, checkpoint, log, config): ") +
                              (same ? "yes" : "no") + ", resume 2+3 epochs == 5 epochs bit-exact: " +
                              (resume ? "yes" : "no")};
}

// ---- 10 ----------------------------------------------------------------------

struct OracleSet {
  std::vector<Vec> texts;
  std::vector<Mat> frames;
};

OracleSet oracle_encode(const std::vector<PairRecord>& records, const ModelParameters& m) {
  OracleSet o;
  const auto& e = m.encoders;
  const Eigen::Index tp = m.radius.frames();
  for (const auto& r : records) {
    o.texts.push_back(oracle::normalized(oracle::matvec(e.text_adapter, oracle::matvec(e.text_projection, r.text.features))));
    const auto total = static_cast<Eigen::Index>(r.video.frames.size());
    Mat f(e.dim(), tp);
    for (Eigen::Index k = 0; k < tp; ++k) {
      const Vec& raw = r.video.frames[static_cast<std::size_t>(k * total / tp)];
      f.col(k) = oracle::normalized(oracle::matvec(e.frame_adapter, oracle::matvec(e.frame_projection, raw)));
    }
    o.frames.push_back(f);
  }
  return o;
}

Vec oracle_radius(const Vec& t, const Mat& frames, const RadiusParameters& p) {
  const Eigen::Index tp = frames.cols(), d = t.size();
  std::vector<double> s;
  double mean = 0.0;
  for (Eigen::Index i = 0; i < tp; ++i) {
    s.push_back(oracle::cosine(t, frames.col(i)));
    mean += s.back() / static_cast<double>(tp);
  }
  Vec r(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    double z = 0.0;
    switch (p.variant) {
      case RadiusVariant::kFixedMean: z = mean; break;
      case RadiusVariant::kScalar: z = p.theta * mean; break;
      case RadiusVariant::kLinear:
        for (Eigen::Index i = 0; i < tp; ++i) z += s[static_cast<std::size_t>(i)] * p.weights(i, j);
        break;
    }
    r[j] = std::exp(z);
  }
  return r;
}

Outcome analysis_reports(const Synthetic& s, const fs::path& work) {
  const fs::path ck_path = work / "c9a" / "train-001" / "checkpoint.tmck";
  std::ofstream(work / "analyze.conf") << slurp(TEXTMASS_SYNTHETIC_CONFIG) << "checkpoint = " << ck_path.string()
                                       << "\nanalyze_queries = 4\n";
  if (cli({"analyze", "--config", (work / "analyze.conf").string(), "--out", (work / "c10").string()}) != 0)
    return {false, "analyze failed"};
  const fs::path run = work / "c10" / "analyze-001";
  const auto radius_rows = read_csv(run / "radius.csv");
  const auto align_rows = read_csv(run / "alignment.csv");
  bool schema = !radius_rows.empty() && !align_rows.empty() &&
                join(radius_rows[0]) == "query_id,candidate_id,relevant,l1_radius,best_similarity" &&
                join(align_rows[0]) == "query_id,max_irrelevant_sim_det,max_irrelevant_sim_stoch,ce_det,ce_stoch";

  const Checkpoint ck = load_checkpoint(ck_path);
  const ModelParameters& m = ck.params;
  const std::uint64_t seed = ck.config.seed;
  const int trials = s.rc.train.sampling.trials;
  const OracleSet o = oracle_encode(s.test, m);
  const std::size_t n = s.test.size();

  // Independent best-of-M and deterministic matrices.
  Mat det(n, n), sto(n, n);
  std::vector<std::vector<double>> l1(4, std::vector<double>(n));
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t c = 0; c < n; ++c) {
      const Vec v = oracle::fuse(o.frames[c], o.texts[q], m.fusion.query, m.fusion.key, m.fusion.value, m.fusion.output);
      const Vec r = oracle_radius(o.texts[q], o.frames[c], m.radius);
      SeededRng rng = selection_rng(seed, static_cast<std::uint64_t>(s.test[q].text.id),
                                    static_cast<std::uint64_t>(s.test[c].video.id));
      double best = 0.0;
      for (int k = 0; k < trials; ++k) {
        const double sim = oracle::cosine(o.texts[q] + r.cwiseProduct(sample_gaussian(rng, r.size())), v);
        if (k == 0 || sim > best) best = sim;
      }
      det(q, c) = oracle::cosine(o.texts[q], v);
      sto(q, c) = best;
      if (q < 4) l1[q][c] = r.sum();
    }
  }

  // In-memory reports against the oracle, then the CSV against the reports.
  const EncodedSet set = encode_set(s.test, m);
  double worst = 0.0, worst_csv = 0.0;
  bool shape = radius_rows.size() == 1 + 4 * n && align_rows.size() == 1 + n;
  int smallest = 0;
  for (std::size_t q = 0; q < 4 && shape; ++q) {
    const auto rows = radius_dynamics_report(set, q, m, s.rc.train.sampling, seed);
    std::size_t arg = 0;
    for (std::size_t c = 0; c < n; ++c) {
      // |R|_1 reaches the hundreds; its error is scaled by magnitude.
      worst = std::max({worst, std::abs(rows[c].l1_radius - l1[q][c]) / std::max(1.0, l1[q][c]),
                        std::abs(rows[c].best_similarity - sto(q, c))});
      const auto& csv = radius_rows[1 + q * n + c];
      worst_csv = std::max({worst_csv, std::abs(std::stod(csv[3]) - rows[c].l1_radius),
                            std::abs(std::stod(csv[4]) - rows[c].best_similarity)});
      shape = shape && std::stoll(csv[0]) == s.test[q].text.id && std::stoll(csv[1]) == s.test[c].video.id &&
              csv[2] == (c == q ? "1" : "0");
      if (l1[q][c] < l1[q][arg]) arg = c;
    }
    smallest += arg == q ? 1 : 0;
  }
  const double lambda = std::min(std::exp(m.logit_scale.log_lambda), 100.0);
  const auto align = alignment_report(inference_similarity_matrix(set, m, s.rc.train.sampling, false, seed),
                                      inference_similarity_matrix(set, m, s.rc.train.sampling, true, seed), lambda);
  double irr_det = 0.0, irr_sto = 0.0, ce_det = 0.0, ce_sto = 0.0;
  for (std::size_t q = 0; q < n && shape; ++q) {
    double md = -2.0, ms = -2.0;
    std::vector<double> rd, rs;
    for (std::size_t c = 0; c < n; ++c) {
      rd.push_back(det(q, c));
      rs.push_back(sto(q, c));
      if (c != q) {
        md = std::max(md, det(q, c));
        ms = std::max(ms, sto(q, c));
      }
    }
    const double cd = oracle::neg_log_softmax(rd, q, lambda), cs = oracle::neg_log_softmax(rs, q, lambda);
    worst = std::max({worst, std::abs(align[q].max_irrelevant_det - md), std::abs(align[q].max_irrelevant_stoch - ms),
                      std::abs(align[q].ce_det - cd), std::abs(align[q].ce_stoch - cs)});
    const auto& csv = align_rows[1 + q];
    shape = shape && std::stoll(csv[0]) == s.test[q].text.id;
    for (int k = 0; k < 4; ++k) {
      const double mem[4] = {align[q].max_irrelevant_det, align[q].max_irrelevant_stoch, align[q].ce_det,
                             align[q].ce_stoch};
      worst_csv = std::max(worst_csv, std::abs(std::stod(csv[1 + k]) - mem[k]));
    }
    irr_det += md;
    irr_sto += ms;
    ce_det += cd;
    ce_sto += cs;
  }
  const double dn = static_cast<double>(n);
  std::printf("  observation: relevant candidate has the smallest |R|_1 for %d of 4 queries\n", smallest);
  std::printf("  observation: mean max irrelevant similarity det %.4f vs stochastic %.4f\n", irr_det / dn, irr_sto / dn);
  std::printf("  observation: mean relevant cross-entropy det %.4f vs stochastic %.4f\n", ce_det / dn, ce_sto / dn);
  schema = schema && shape;
  return {schema && worst <= kRecompute && worst_csv <= kCsvRounding,
          std::string("schemas ") + (schema ? "ok" : "WRONG") + ", report vs recomputation max err " +
              fmt("%.1e", worst) + " (tol 1e-9, relative above 1), CSV vs report " + fmt("%.1e", worst_csv) + " (6-decimal rounding)"};
}

}  // namespace

int main() {
  const fs::path work = work_dir();
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("[%s] C%-2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "gradient suite", gradient_suite);
  report(2, "closed-form loss", closed_form_loss);
  report(3, "reparameterization statistics", reparameterization);
  report(4, "support-vector geometry", support_geometry);
  report(5, "metric oracle", metric_oracle);

  Synthetic synth;
  bool trained = true;
  try {
    synth = run_synthetic();
  } catch (const std::exception& e) {
    std::printf("synthetic training failed: %s\n", e.what());
    trained = false;
  }
  auto needs_training = [&](std::function<Outcome()> fn) {
    return [=, &trained]() { return trained ? fn() : Outcome{false, "synthetic training failed"}; };
  };
  report(6, "best-of-M monotonicity", needs_training([&] { return best_of_m(synth, work); }));
  report(7, "synthetic improvement", needs_training([&] { return synthetic_improvement(synth); }));
  report(8, "ablation consistency", needs_training([&] { return ablation_consistency(synth, work); }));
  report(9, "determinism", needs_training([&] { return determinism(synth, work); }));
  report(10, "analysis reports", needs_training([&] { return analysis_reports(synth, work); }));

  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
