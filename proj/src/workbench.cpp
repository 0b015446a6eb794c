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


#include "textmass/workbench.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <map>
#include <sstream>

#include "textmass/errors.hpp"
#include "textmass/gradcheck.hpp"

namespace textmass {

// ---- run configuration ------------------------------------------------------

const std::set<std::string>& run_config_keys() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> k = train_config_keys();
    for (const char* extra :
         {"data.train_pairs", "data.test_pairs", "data.frames", "data.coverage", "data.noise", "data.distractors",
          "data.distractor_weight", "data.seed", "data_dir", "checkpoint", "seeds", "eval_sampling",
          "analyze_queries"}) {
      k.insert(extra);
    }
    return k;
  }();
  return keys;
}

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    KeyValues kv;
    kv.set("seeds", item);
    seeds.push_back(kv.get_u64("seeds", 0));
  }
  require(!seeds.empty(), "config: seeds must list at least one seed");
  return seeds;
}

}  // namespace

RunConfig run_config_from(const KeyValues& kv, RunConfig base) {
  kv.reject_unknown(run_config_keys());
  RunConfig rc = std::move(base);
  rc.train = train_config_from(kv, rc.train);
  rc.data.concept_dim = static_cast<int>(rc.train.model.concept_dim);
  rc.data.train_pairs = static_cast<int>(kv.get_int("data.train_pairs", rc.data.train_pairs));
  rc.data.test_pairs = static_cast<int>(kv.get_int("data.test_pairs", rc.data.test_pairs));
  rc.data.frames = static_cast<int>(kv.get_int("data.frames", rc.data.frames));
  rc.data.coverage = kv.get_double("data.coverage", rc.data.coverage);
  rc.data.noise = kv.get_double("data.noise", rc.data.noise);
  rc.data.distractors = static_cast<int>(kv.get_int("data.distractors", rc.data.distractors));
  rc.data.distractor_weight = kv.get_double("data.distractor_weight", rc.data.distractor_weight);
  rc.data.seed = kv.get_u64("data.seed", rc.data.seed);
  rc.data_dir = kv.get_string("data_dir", rc.data_dir);
  rc.checkpoint = kv.get_string("checkpoint", rc.checkpoint);
  if (kv.has("seeds")) rc.seeds = parse_seed_list(kv.get("seeds"));
  rc.eval_sampling = kv.get_bool("eval_sampling", rc.eval_sampling);
  rc.analyze_queries = static_cast<int>(kv.get_int("analyze_queries", rc.analyze_queries));
  require(rc.analyze_queries >= 1, "config: analyze_queries must be >= 1");
  return rc;
}

KeyValues to_key_values(const RunConfig& rc) {
  KeyValues kv = to_key_values(rc.train);
  kv.set("data.train_pairs", std::to_string(rc.data.train_pairs));
  kv.set("data.test_pairs", std::to_string(rc.data.test_pairs));
  kv.set("data.frames", std::to_string(rc.data.frames));
  kv.set("data.coverage", format_exact(rc.data.coverage));
  kv.set("data.noise", format_exact(rc.data.noise));
  kv.set("data.distractors", std::to_string(rc.data.distractors));
  kv.set("data.distractor_weight", format_exact(rc.data.distractor_weight));
  kv.set("data.seed", std::to_string(rc.data.seed));
  if (!rc.data_dir.empty()) kv.set("data_dir", rc.data_dir);
  if (!rc.checkpoint.empty()) kv.set("checkpoint", rc.checkpoint);
  if (!rc.seeds.empty()) {
    std::string s;
    for (std::size_t i = 0; i < rc.seeds.size(); ++i) s += (i ? "," : "") + std::to_string(rc.seeds[i]);
    kv.set("seeds", s);
  }
  kv.set("eval_sampling", rc.eval_sampling ? "true" : "false");
  kv.set("analyze_queries", std::to_string(rc.analyze_queries));
  return kv;
}

std::vector<std::uint64_t> effective_seeds(const RunConfig& rc) {
  return rc.seeds.empty() ? std::vector<std::uint64_t>{rc.train.seed} : rc.seeds;
}

std::vector<PairRecord> load_records(const RunConfig& rc) {
  if (!rc.data_dir.empty()) return read_dataset(rc.data_dir);
  SyntheticSpec spec = rc.data;
  spec.concept_dim = static_cast<int>(rc.train.model.concept_dim);
  return generate(spec);
}

// ---- metrics tables ---------------------------------------------------------

void write_run_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << "config,seed,direction,r1,r5,r10,mdr,mnr\n";
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out << r.config << ',' << r.seed << ',' << to_string(m.direction) << ',' << format_fixed6(m.r1) << ','
        << format_fixed6(m.r5) << ',' << format_fixed6(m.r10) << ',' << format_fixed6(m.mdr) << ','
        << format_fixed6(m.mnr) << '\n';
  }
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<MetricsRow> median_rows(const std::vector<MetricsRow>& rows) {
  std::vector<std::pair<std::string, Direction>> order;
  for (const auto& r : rows) {
    const std::pair key{r.config, r.metrics.direction};
    if (std::find(order.begin(), order.end(), key) == order.end()) order.push_back(key);
  }
  std::vector<MetricsRow> out;
  for (const auto& [config, dir] : order) {
    std::vector<double> r1, r5, r10, mdr, mnr;
    for (const auto& r : rows) {
      if (r.config != config || r.metrics.direction != dir) continue;
      r1.push_back(r.metrics.r1);
      r5.push_back(r.metrics.r5);
      r10.push_back(r.metrics.r10);
      mdr.push_back(r.metrics.mdr);
      mnr.push_back(r.metrics.mnr);
    }
    out.push_back({config, "median",
                   {dir, median_of(r1), median_of(r5), median_of(r10), median_of(mdr), median_of(mnr)}});
  }
  return out;
}

// ---- ablation grids ---------------------------------------------------------

std::vector<AblationCell> radius_ablation_cells(const TrainConfig& base) {
  std::vector<AblationCell> cells;
  TrainConfig c = base;
  c.mode = TrainMode::kBaseline;
  cells.push_back({"baseline", c});
  for (RadiusVariant v : {RadiusVariant::kFixedMean, RadiusVariant::kScalar, RadiusVariant::kLinear}) {
    c = base;
    c.mode = TrainMode::kTMass;
    c.model.radius = v;
    cells.push_back({to_string(v), c});
  }
  return cells;
}

std::vector<AblationCell> loss_ablation_cells(const TrainConfig& base) {
  std::vector<AblationCell> cells;
  TrainConfig c = base;
  c.mode = TrainMode::kBaseline;
  cells.push_back({"ce", c});
  c = base;
  c.mode = TrainMode::kCePlusS;
  cells.push_back({"ce+s", c});
  c = base;
  c.mode = TrainMode::kTMass;
  c.alpha = 0.0;
  cells.push_back({"s", c});
  c = base;
  c.mode = TrainMode::kTMass;
  cells.push_back({"s+sup", c});
  return cells;
}

std::vector<AblationCell> alpha_sweep_cells(const TrainConfig& base) {
  std::vector<AblationCell> cells;
  for (double a : {0.5, 0.8, 1.0, 1.2, 1.5}) {
    TrainConfig c = base;
    c.mode = TrainMode::kTMass;
    c.alpha = a;
    cells.push_back({"alpha=" + format_exact(a), c});
  }
  return cells;
}

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string s;
  for (const auto& i : items) s += (s.empty() ? "" : " ") + i;
  return s.empty() ? "(none)" : s;
}

bool uses_sampling(const RunConfig& rc, TrainMode mode) { return rc.eval_sampling && mode != TrainMode::kBaseline; }

}  // namespace

std::vector<MetricsRow> ablation_matrix(const RunConfig& rc, const std::vector<AblationCell>& cells,
                                        std::span<const PairRecord> train_set,
                                        std::span<const PairRecord> test_set, const LogFn& log) {
  std::vector<MetricsRow> rows;
  for (const auto& cell : cells) {
    for (std::uint64_t seed : effective_seeds(rc)) {
      TrainConfig cfg = cell.config;
      cfg.seed = seed;
      const TrainResult tr = train(cfg, train_set);
      const std::vector<std::string> trained = tr.log.empty() ? std::vector<std::string>{} : tr.log.back().trained;
      const bool sampled = uses_sampling(rc, cfg.mode);
      const EvaluationResult ev = evaluate_model(test_set, tr.checkpoint.params, cfg.sampling, sampled, seed);
      if (log) {
        log(cell.label + " seed " + std::to_string(seed) + ": mode=" + to_string(cfg.mode) +
            " radius=" + to_string(cfg.model.radius) + " sampling=" + (sampled ? "on" : "off") +
            " trained=" + join(trained));
      }
      rows.push_back({cell.label, std::to_string(seed), ev.t2v});
    }
  }
  const auto medians = median_rows(rows);
  rows.insert(rows.end(), medians.begin(), medians.end());
  return rows;
}

std::vector<MetricsRow> sweep_trials(const RunConfig& rc, std::span<const PairRecord> train_set,
                                     std::span<const PairRecord> test_set, const LogFn& log) {
  std::vector<MetricsRow> rows;
  for (std::uint64_t seed : effective_seeds(rc)) {
    TrainConfig cfg = rc.train;
    cfg.mode = TrainMode::kTMass;
    cfg.seed = seed;
    const TrainResult tr = train(cfg, train_set);
    const EncodedSet set = encode_set(test_set, tr.checkpoint.params);
    rows.push_back({"M=off", std::to_string(seed),
                    evaluate_pairs(inference_similarity_matrix(set, tr.checkpoint.params, cfg.sampling, false, seed))
                        .t2v});
    for (int m : {5, 10, 20}) {
      SamplingConfig s = cfg.sampling;
      s.trials = m;
      rows.push_back({"M=" + std::to_string(m), std::to_string(seed),
                      evaluate_pairs(inference_similarity_matrix(set, tr.checkpoint.params, s, true, seed)).t2v});
    }
    if (log) log("sweep-trials seed " + std::to_string(seed) + " done");
  }
  return rows;
}

// ---- run directories --------------------------------------------------------

RunDirectory RunDirectory::create(const std::filesystem::path& root, const std::string& command) {
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec) throw IoError("cannot create output root " + root.string() + ": " + ec.message());
  for (int i = 1; i < 100000; ++i) {
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "-%03d", i);
    const auto candidate = root / (command + suffix);
    if (std::filesystem::create_directory(candidate, ec)) {
      RunDirectory rd;
      rd.path_ = candidate;
      return rd;
    }
    if (ec) throw IoError("cannot create run directory " + candidate.string() + ": " + ec.message());
  }
  throw IoError("no free run directory under " + root.string());
}

void RunDirectory::log(const std::string& message) {
  std::ofstream f(file("run.log"), std::ios::app);
  if (!f) throw IoError("cannot append to " + file("run.log").string());
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
  f << stamp << ' ' << message << '\n';
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed: " + path.string());
}

// ---- CLI --------------------------------------------------------------------

namespace {

struct Overrides {
  std::string config_path;
  std::string out = "runs";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::string> trials;
  std::optional<double> alpha;
  std::optional<std::string> radius;
};

RunConfig resolve(const Overrides& o) {
  KeyValues kv = o.config_path.empty() ? KeyValues{} : KeyValues::load(o.config_path);
  if (o.seed) kv.set("seed", std::to_string(*o.seed));
  if (o.mode) kv.set("mode", *o.mode);
  if (o.alpha) kv.set("alpha", format_exact(*o.alpha));
  if (o.radius) kv.set("radius", *o.radius);
  if (o.trials) {
    if (*o.trials == "off") {
      kv.set("eval_sampling", "false");
    } else {
      kv.set("trials", *o.trials);
      kv.set("eval_sampling", "true");
    }
  }
  RunConfig rc = run_config_from(kv);
  validate_config(rc.train);
  return rc;
}

std::string config_label(const TrainConfig& cfg) {
  return cfg.mode == TrainMode::kBaseline ? "baseline" : to_string(cfg.mode) + "/" + to_string(cfg.model.radius);
}

std::vector<MetricsRow> paired_rows(const std::string& label, std::uint64_t seed, const EvaluationResult& ev) {
  return {{label, std::to_string(seed), ev.t2v}, {label, std::to_string(seed), ev.v2t}};
}

std::string metrics_text(const std::vector<MetricsRow>& rows) {
  std::ostringstream ss;
  write_run_metrics_csv(ss, rows);
  return ss.str();
}

void write_epochs_csv(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
  std::ostringstream ss;
  ss << "epoch,steps,dropped_pairs,loss_total,loss_s,loss_sup,loss_ce,lr_head,lr_adapter,val_r1\n";
  for (const auto& e : log) {
    ss << e.epoch << ',' << e.steps << ',' << e.dropped_pairs << ',' << format_fixed6(e.mean_total) << ','
       << format_fixed6(e.mean_s) << ',' << format_fixed6(e.mean_sup) << ',' << format_fixed6(e.mean_ce) << ','
       << format_exact(e.lr_head) << ',' << format_exact(e.lr_adapter) << ','
       << (e.validation ? format_fixed6(e.validation->t2v.r1) : std::string("")) << '\n';
  }
  write_text_file(path, ss.str());
}

struct Split2 {
  std::vector<PairRecord> train;
  std::vector<PairRecord> test;
};

Split2 split_records(const RunConfig& rc) {
  const auto all = load_records(rc);
  return {select_split(all, Split::kTrain), select_split(all, Split::kTest)};
}

Checkpoint require_checkpoint(const RunConfig& rc) {
  require(!rc.checkpoint.empty(), "config: key 'checkpoint' is required for this command");
  return load_checkpoint(rc.checkpoint);
}

int cmd_gen_data(const RunConfig& rc, RunDirectory& rd, std::ostream& out) {
  const auto records = load_records(rc);
  write_dataset(rd.file("data"), records);
  write_text_file(rd.file("metrics.csv"), metrics_text({}));
  rd.log("wrote " + std::to_string(records.size()) + " pairs");
  out << "dataset: " << rd.file("data").string() << '\n';
  return 0;
}

int cmd_train(const RunConfig& rc, RunDirectory& rd, std::ostream& out) {
  const Split2 data = split_records(rc);
  TrainOptions opt;
  if (rc.train.validate) opt.validation = data.test;
  opt.on_epoch = [&](const EpochLog& e) {
    rd.log("epoch " + std::to_string(e.epoch) + " loss " + format_fixed6(e.mean_total) + " trained " +
           join(e.trained));
  };
  const TrainResult tr = train(rc.train, data.train, opt);
  save_checkpoint(rd.file("checkpoint.tmck"), tr.checkpoint);
  write_epochs_csv(rd.file("epochs.csv"), tr.log);
  const bool sampled = uses_sampling(rc, rc.train.mode);
  const auto ev = evaluate_model(data.test, tr.checkpoint.params, rc.train.sampling, sampled, rc.train.seed);
  const auto rows = paired_rows(config_label(rc.train), rc.train.seed, ev);
  write_text_file(rd.file("metrics.csv"), metrics_text(rows));
  out << "t2v R@1 " << format_fixed6(ev.t2v.r1) << "  v2t R@1 " << format_fixed6(ev.v2t.r1) << '\n';
  out << "checkpoint: " << rd.file("checkpoint.tmck").string() << '\n';
  return 0;
}

int cmd_eval(const RunConfig& rc, RunDirectory& rd, std::ostream& out) {
  const Checkpoint ck = require_checkpoint(rc);
  const Split2 data = split_records(rc);
  const bool sampled = uses_sampling(rc, ck.config.mode);
  const auto ev = evaluate_model(data.test, ck.params, rc.train.sampling, sampled, ck.config.seed);
  const auto rows = paired_rows(config_label(ck.config), ck.config.seed, ev);
  write_text_file(rd.file("metrics.csv"), metrics_text(rows));
  rd.log(std::string("evaluated ") + rc.checkpoint + " sampling=" + (sampled ? "on" : "off"));
  out << "t2v R@1 " << format_fixed6(ev.t2v.r1) << "  v2t R@1 " << format_fixed6(ev.v2t.r1) << '\n';
  return 0;
}

int cmd_table(const std::vector<MetricsRow>& rows, RunDirectory& rd, std::ostream& out) {
  const std::string text = metrics_text(rows);
  write_text_file(rd.file("metrics.csv"), text);
  out << text;
  return 0;
}

int cmd_analyze(const RunConfig& rc, RunDirectory& rd, std::ostream& out) {
  const Split2 data = split_records(rc);
  Checkpoint ck;
  if (rc.checkpoint.empty()) {
    ck = train(rc.train, data.train).checkpoint;
    save_checkpoint(rd.file("checkpoint.tmck"), ck);
  } else {
    ck = load_checkpoint(rc.checkpoint);
  }
  const std::uint64_t seed = ck.config.seed;
  const EncodedSet set = encode_set(data.test, ck.params);
  const int queries = std::min<int>(rc.analyze_queries, static_cast<int>(set.texts.size()));

  std::ostringstream radius_csv;
  int smallest = 0;
  for (int q = 0; q < queries; ++q) {
    const auto rows = radius_dynamics_report(set, q, ck.params, rc.train.sampling, seed);
    write_radius_csv(radius_csv, rows, q == 0);
    const auto best = std::min_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      return a.l1_radius < b.l1_radius;
    });
    smallest += best->relevant ? 1 : 0;
  }
  write_text_file(rd.file("radius.csv"), radius_csv.str());

  const Mat det = inference_similarity_matrix(set, ck.params, rc.train.sampling, false, seed);
  const Mat stoch = inference_similarity_matrix(set, ck.params, rc.train.sampling, true, seed);
  auto align = alignment_report(det, stoch, ck.params.logit_scale.value());
  for (std::size_t q = 0; q < align.size(); ++q) align[q].query_id = set.text_ids[q];
  std::ostringstream align_csv;
  write_alignment_csv(align_csv, align);
  write_text_file(rd.file("alignment.csv"), align_csv.str());

  double irr_det = 0, irr_stoch = 0, ce_det = 0, ce_stoch = 0;
  for (const auto& a : align) {
    irr_det += a.max_irrelevant_det;
    irr_stoch += a.max_irrelevant_stoch;
    ce_det += a.ce_det;
    ce_stoch += a.ce_stoch;
  }
  const double n = static_cast<double>(align.size());
  std::ostringstream obs;
  obs << "relevant candidate has the smallest |R|_1 for " << smallest << " of " << queries << " queries\n"
      << "mean max irrelevant similarity: det " << format_fixed6(irr_det / n) << " stoch "
      << format_fixed6(irr_stoch / n) << '\n'
      << "mean relevant cross-entropy: det " << format_fixed6(ce_det / n) << " stoch " << format_fixed6(ce_stoch / n)
      << '\n';
  write_text_file(rd.file("observations.txt"), obs.str());
  rd.log("observations recorded");

  const auto rows = paired_rows(config_label(ck.config), seed, evaluate_pairs(stoch));
  write_text_file(rd.file("metrics.csv"), metrics_text(rows));
  out << obs.str();
  return 0;
}

int cmd_gradcheck(RunDirectory& rd, std::ostream& out) {
  std::ostringstream csv;
  csv << "case,radius,alpha,mode,max_rel_error,max_abs_error,passed\n";
  double worst = 0.0;
  bool ok = true;
  int index = 0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    for (RadiusVariant v : {RadiusVariant::kFixedMean, RadiusVariant::kScalar, RadiusVariant::kLinear}) {
      for (double alpha : {0.0, 1.2}) {
        const auto report = gradient_check(make_gradcheck_case(seed, v, alpha));
        worst = std::max(worst, report.max_rel_error);
        ok = ok && report.passed;
        csv << index++ << ',' << to_string(v) << ',' << format_exact(alpha) << ",t-mass,"
            << format_exact(report.max_rel_error) << ',' << format_exact(report.max_abs_error) << ','
            << (report.passed ? 1 : 0) << '\n';
      }
    }
  }
  write_text_file(rd.file("gradcheck.csv"), csv.str());
  write_text_file(rd.file("metrics.csv"), metrics_text({}));
  char line[96];
  std::snprintf(line, sizeof line, "max relative error %.3e over %d cases\n", worst, index);
  out << line;
  rd.log(line);
  return ok ? 0 : 1;
}

const char* kUsage =
    "usage: textmass <command> [--config PATH] [--seed N] [--out DIR] [--mode MODE]\n"
    "                [--trials M|off] [--alpha A] [--radius VARIANT]\n"
    "commands: gen-data train eval ablate-radius ablate-loss sweep-trials sweep-alpha analyze gradcheck\n";

const std::vector<std::string> kCommands = {"gen-data",     "train",       "eval",    "ablate-radius", "ablate-loss",
                                            "sweep-trials", "sweep-alpha", "analyze", "gradcheck"};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  if (argc < 2 || std::find(kCommands.begin(), kCommands.end(), argv[1]) == kCommands.end()) {
    if (argc >= 2) err << "unknown command: " << argv[1] << '\n';
    err << kUsage;
    return 1;
  }
  const std::string command = argv[1];

  CLI::App app{"textmass " + command};
  Overrides o;
  app.add_option("--config", o.config_path, "key = value config file");
  app.add_option("--out", o.out, "output root");
  app.add_option("--seed", o.seed, "training seed");
  app.add_option("--mode", o.mode, "t-mass | baseline | ablation-ce-plus-s");
  app.add_option("--trials", o.trials, "samples per pair at inference, or off");
  app.add_option("--alpha", o.alpha, "support loss weight");
  app.add_option("--radius", o.radius, "fixed-mean | scalar | linear");
  try {
    app.parse(argc - 1, argv + 1);
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << kUsage;
    return 1;
  }

  try {
    const RunConfig rc = resolve(o);
    RunDirectory rd = RunDirectory::create(o.out, command);
    write_text_file(rd.file("config.txt"), to_key_values(rc).to_text());
    rd.log("start " + command);
    const LogFn log = [&](const std::string& m) { rd.log(m); };

    int code = 0;
    if (command == "gen-data") {
      code = cmd_gen_data(rc, rd, out);
    } else if (command == "train") {
      code = cmd_train(rc, rd, out);
    } else if (command == "eval") {
      code = cmd_eval(rc, rd, out);
    } else if (command == "gradcheck") {
      code = cmd_gradcheck(rd, out);
    } else if (command == "analyze") {
      code = cmd_analyze(rc, rd, out);
    } else {
      const Split2 data = split_records(rc);
      std::vector<MetricsRow> rows;
      if (command == "ablate-radius") {
        rows = ablation_matrix(rc, radius_ablation_cells(rc.train), data.train, data.test, log);
      } else if (command == "ablate-loss") {
        rows = ablation_matrix(rc, loss_ablation_cells(rc.train), data.train, data.test, log);
      } else if (command == "sweep-alpha") {
        rows = ablation_matrix(rc, alpha_sweep_cells(rc.train), data.train, data.test, log);
      } else {
        rows = sweep_trials(rc, data.train, data.test, log);
      }
      code = cmd_table(rows, rd, out);
    }
    rd.log("done " + command + " exit " + std::to_string(code));
    out << "run directory: " << rd.path().string() << '\n';
    return code;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace textmass
