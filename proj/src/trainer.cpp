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

#include "textmass/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include "textmass/errors.hpp"

namespace textmass {

// ---- configuration ----------------------------------------------------------

void validate_config(const TrainConfig& cfg) {
  require(cfg.batch_size >= 1, "config: batch_size must be >= 1");
  require(cfg.epochs >= 0, "config: epochs must be >= 0");
  require(cfg.lr_head > 0.0 && cfg.lr_adapter > 0.0, "config: learning rates must be positive");
  require(cfg.weight_decay >= 0.0, "config: weight_decay must be >= 0");
  require(cfg.warmup >= 0.0 && cfg.warmup < 1.0, "config: warmup must lie in [0, 1)");
  require(cfg.alpha >= 0.0, "config: alpha must be >= 0");
  require(cfg.model.dim >= 1 && cfg.model.concept_dim >= 1 && cfg.model.sampled_frames >= 1,
          "config: dim, concept_dim and sampled_frames must be positive");
  require(cfg.model.dropout >= 0.0 && cfg.model.dropout < 1.0, "config: dropout must lie in [0, 1)");
  require(cfg.sampling.trials >= 1, "config: trials must be >= 1");
  require(cfg.sampling.train_samples_per_text >= 1, "config: train_samples_per_text must be >= 1");
}

const std::set<std::string>& train_config_keys() {
  static const std::set<std::string> keys = {
      "batch_size", "epochs", "lr_head", "lr_adapter", "weight_decay", "warmup", "alpha", "seed",
      "mode", "dim", "concept_dim", "sampled_frames", "radius", "dropout", "tower_misalignment",
      "adapters", "trials", "train_samples_per_text", "theta_init", "theta_frozen", "validate"};
  return keys;
}

KeyValues to_key_values(const TrainConfig& cfg) {
  KeyValues kv;
  kv.set("mode", to_string(cfg.mode));
  kv.set("radius", to_string(cfg.model.radius));
  kv.set("batch_size", std::to_string(cfg.batch_size));
  kv.set("epochs", std::to_string(cfg.epochs));
  kv.set("lr_head", format_exact(cfg.lr_head));
  kv.set("lr_adapter", format_exact(cfg.lr_adapter));
  kv.set("weight_decay", format_exact(cfg.weight_decay));
  kv.set("warmup", format_exact(cfg.warmup));
  kv.set("alpha", format_exact(cfg.alpha));
  kv.set("seed", std::to_string(cfg.seed));
  kv.set("dim", std::to_string(cfg.model.dim));
  kv.set("concept_dim", std::to_string(cfg.model.concept_dim));
  kv.set("sampled_frames", std::to_string(cfg.model.sampled_frames));
  kv.set("dropout", format_exact(cfg.model.dropout));
  kv.set("tower_misalignment", format_exact(cfg.model.tower_misalignment));
  kv.set("adapters", cfg.model.adapters_enabled ? "true" : "false");
  kv.set("trials", std::to_string(cfg.sampling.trials));
  kv.set("train_samples_per_text", std::to_string(cfg.sampling.train_samples_per_text));
  kv.set("theta_init", format_exact(cfg.theta_init));
  kv.set("theta_frozen", cfg.theta_frozen ? "true" : "false");
  kv.set("validate", cfg.validate ? "true" : "false");
  return kv;
}

TrainConfig train_config_from(const KeyValues& kv, TrainConfig c) {
  c.mode = parse_train_mode(kv.get_string("mode", to_string(c.mode)));
  c.model.radius = parse_radius_variant(kv.get_string("radius", to_string(c.model.radius)));
  c.batch_size = static_cast<int>(kv.get_int("batch_size", c.batch_size));
  c.epochs = static_cast<int>(kv.get_int("epochs", c.epochs));
  c.lr_head = kv.get_double("lr_head", c.lr_head);
  c.lr_adapter = kv.get_double("lr_adapter", c.lr_adapter);
  c.weight_decay = kv.get_double("weight_decay", c.weight_decay);
  c.warmup = kv.get_double("warmup", c.warmup);
  c.alpha = kv.get_double("alpha", c.alpha);
  c.seed = kv.get_u64("seed", c.seed);
  c.model.dim = kv.get_int("dim", c.model.dim);
  c.model.concept_dim = kv.get_int("concept_dim", c.model.concept_dim);
  c.model.sampled_frames = kv.get_int("sampled_frames", c.model.sampled_frames);
  c.model.dropout = kv.get_double("dropout", c.model.dropout);
  c.model.tower_misalignment = kv.get_double("tower_misalignment", c.model.tower_misalignment);
  c.model.adapters_enabled = kv.get_bool("adapters", c.model.adapters_enabled);
  c.sampling.trials = static_cast<int>(kv.get_int("trials", c.sampling.trials));
  c.sampling.train_samples_per_text =
      static_cast<int>(kv.get_int("train_samples_per_text", c.sampling.train_samples_per_text));
  c.theta_init = kv.get_double("theta_init", c.theta_init);
  c.theta_frozen = kv.get_bool("theta_frozen", c.theta_frozen);
  c.validate = kv.get_bool("validate", c.validate);
  validate_config(c);
  return c;
}

ModelParameters initial_model(const TrainConfig& cfg) {
  ModelParameters m = make_model(cfg.model, cfg.seed);
  m.radius.theta = cfg.theta_init;
  m.radius.theta_frozen = cfg.theta_frozen;
  return m;
}

// ---- schedule and optimizer ---------------------------------------------------

double lr_at(std::int64_t step, std::int64_t total_steps, const TrainConfig& cfg, ParamGroup group) {
  require(total_steps >= 1, "lr_at: total steps must be >= 1");
  require(step >= 0 && step <= total_steps,
          "lr_at: step " + std::to_string(step) + " outside [0, " + std::to_string(total_steps) + "]");
  const double base = group == ParamGroup::kHead ? cfg.lr_head : cfg.lr_adapter;
  const double warm = cfg.warmup * static_cast<double>(total_steps);
  const auto s = static_cast<double>(step);
  if (s < warm) return base * s / warm;
  const double span = static_cast<double>(total_steps) - warm;
  const double progress = span > 0.0 ? (s - warm) / span : 1.0;
  return base * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

OptimizerState::Slot& OptimizerState::slot(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  for (auto& s : slots) {
    if (s.name == name) {
      require(s.m.rows() == rows && s.m.cols() == cols, "optimizer: moment shape mismatch for " + name);
      return s;
    }
  }
  slots.push_back({name, Mat::Zero(rows, cols), Mat::Zero(rows, cols)});
  return slots.back();
}

void adamw_step(const std::vector<ParamView>& params, const GradientSet& grads, OptimizerState& state,
                GroupRates lr, double weight_decay) {
  require(params.size() == grads.entries.size(), "adamw_step: gradient set does not match parameters");
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& g = grads.entries[k].value;
    require(grads.entries[k].name == params[k].name && g.rows() == params[k].rows && g.cols() == params[k].cols,
            "adamw_step: gradient shape mismatch for " + params[k].name);
    if (!g.allFinite()) {
      throw TrainingDivergence("non-finite gradient for " + params[k].name, state.step);
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(OptimizerState::kBeta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(OptimizerState::kBeta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const ParamView& p = params[k];
    const Mat& g = grads.entries[k].value;
    auto& s = state.slot(p.name, p.rows, p.cols);
    s.m = OptimizerState::kBeta1 * s.m + (1.0 - OptimizerState::kBeta1) * g;
    s.v = OptimizerState::kBeta2 * s.v + (1.0 - OptimizerState::kBeta2) * g.cwiseProduct(g);
    const double rate = p.group == ParamGroup::kHead ? lr.head : lr.adapter;
    const double decay = p.decay ? weight_decay : 0.0;
    Eigen::Map<Mat> x(p.data, p.rows, p.cols);
    const Mat m_hat = s.m / bc1;
    const Mat v_hat = s.v / bc2;
    const Mat adam = (m_hat.array() / (v_hat.array().sqrt() + OptimizerState::kEps)).matrix();
    x = x - rate * adam - rate * decay * x;
  }
}

// ---- checkpoint -------------------------------------------------------------

namespace {

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes.insert(bytes.end(), s.begin(), s.end());
  }
  void tensor(const std::string& name, const double* data, Eigen::Index rows, Eigen::Index cols) {
    str(name);
    u32(2);
    u32(static_cast<std::uint32_t>(rows));
    u32(static_cast<std::uint32_t>(cols));
    Eigen::Map<const Mat> m(data, rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) f64(m(r, c));
    }
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}
  std::uint64_t at() const { return at_; }
  void need(std::uint64_t n) {
    if (at_ + n > bytes_.size()) throw FormatError("truncated checkpoint", at_);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[at_ + i]) << (8 * i);
    at_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[at_ + i]) << (8 * i);
    at_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(at_), bytes_.begin() + static_cast<std::ptrdiff_t>(at_ + n));
    at_ += n;
    return s;
  }
  std::pair<std::string, Mat> tensor() {
    std::string name = str();
    const std::uint64_t shape_at = at_;
    const std::uint32_t ndim = u32();
    if (ndim != 2) throw FormatError("tensor '" + name + "' must be rank 2", shape_at);
    const std::uint32_t rows = u32();
    const std::uint32_t cols = u32();
    need(static_cast<std::uint64_t>(rows) * cols * 8);
    Mat m(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = f64();
    }
    return {std::move(name), std::move(m)};
  }
  bool done() const { return at_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::uint64_t at_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
  Writer w;
  for (char ch : std::string("TMCK")) w.bytes.push_back(static_cast<std::uint8_t>(ch));
  w.u32(kCheckpointVersion);

  auto params = ck.params;
  const auto views = all_parameters(params);
  w.u32(static_cast<std::uint32_t>(views.size()));
  for (const auto& v : views) w.tensor(v.name, v.data, v.rows, v.cols);

  w.u32(static_cast<std::uint32_t>(2 * ck.optimizer.slots.size() + 1));
  const double step = static_cast<double>(ck.optimizer.step);
  w.tensor("adam.step", &step, 1, 1);
  for (const auto& s : ck.optimizer.slots) {
    w.tensor("adam.m/" + s.name, s.m.data(), s.m.rows(), s.m.cols());
    w.tensor("adam.v/" + s.name, s.v.data(), s.v.rows(), s.v.cols());
  }

  w.str(to_key_values(ck.config).to_text());
  w.u64(ck.epochs_done);
  w.u64(ck.step);
  return w.bytes;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  static constexpr char kMagic[] = "TMCK";
  for (std::uint64_t i = 0; i < 4; ++i) {
    if (i >= bytes.size() || bytes[i] != static_cast<std::uint8_t>(kMagic[i])) {
      throw FormatError("bad checkpoint magic", i);
    }
  }
  Reader r(bytes);
  r.u32();  // magic, already checked
  if (r.u32() != kCheckpointVersion) throw FormatError("unsupported checkpoint version", 4);

  std::vector<std::pair<std::string, Mat>> tensors;
  const std::uint32_t count = r.u32();
  for (std::uint32_t k = 0; k < count; ++k) tensors.push_back(r.tensor());

  const std::uint64_t opt_at = r.at();
  std::vector<std::pair<std::string, Mat>> moments;
  const std::uint32_t opt_count = r.u32();
  for (std::uint32_t k = 0; k < opt_count; ++k) moments.push_back(r.tensor());

  const std::uint64_t cfg_at = r.at();
  Checkpoint ck;
  try {
    ck.config = train_config_from(KeyValues::parse(r.str(), "checkpoint config"));
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what(), cfg_at);
  }
  ck.epochs_done = r.u64();
  ck.step = r.u64();
  if (!r.done()) throw FormatError("trailing bytes after checkpoint", r.at());

  ck.params = initial_model(ck.config);
  for (auto& v : all_parameters(ck.params)) {
    auto it = std::find_if(tensors.begin(), tensors.end(), [&](const auto& t) { return t.first == v.name; });
    if (it == tensors.end()) throw FormatError("checkpoint lacks tensor '" + v.name + "'", 8);
    if (it->second.rows() != v.rows || it->second.cols() != v.cols) {
      throw FormatError("tensor '" + v.name + "' has the wrong shape", 8);
    }
    Eigen::Map<Mat>(v.data, v.rows, v.cols) = it->second;
  }

  for (std::size_t k = 0; k < moments.size(); ++k) {
    const auto& [name, value] = moments[k];
    if (name == "adam.step") {
      ck.optimizer.step = static_cast<std::int64_t>(value(0, 0));
    } else if (name.rfind("adam.m/", 0) == 0) {
      ck.optimizer.slot(name.substr(7), value.rows(), value.cols()).m = value;
    } else if (name.rfind("adam.v/", 0) == 0) {
      ck.optimizer.slot(name.substr(7), value.rows(), value.cols()).v = value;
    } else {
      throw FormatError("unknown optimizer entry '" + name + "'", opt_at);
    }
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const auto bytes = encode_checkpoint(ck);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

// ---- training loop ----------------------------------------------------------

EvaluationResult evaluate_model(std::span<const PairRecord> records, const ModelParameters& params,
                                const SamplingConfig& sampling, bool use_sampling, std::uint64_t seed) {
  return evaluate_pairs(inference_similarity_matrix(records, params, sampling, use_sampling, seed));
}

namespace {

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  SeededRng rng(seed, substream({0x5A0FF1E, epoch}));
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.next_u64() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, std::span<const PairRecord> train_set, const TrainOptions& options) {
  validate_config(cfg);
  TrainResult result;
  Checkpoint& ck = result.checkpoint;
  if (options.resume != nullptr) {
    require(to_key_values(options.resume->config).to_text() == to_key_values(cfg).to_text(),
            "train: resume checkpoint was written with a different config");
    ck = *options.resume;
  } else {
    ck.config = cfg;
    ck.params = initial_model(cfg);
  }
  if (cfg.epochs == 0) return result;

  const std::size_t n = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t steps_per_epoch = train_set.size() / n;
  require(steps_per_epoch >= 1, "train: dataset has fewer pairs than one batch");
  const auto total = static_cast<std::int64_t>(steps_per_epoch) * cfg.epochs;
  const int dropped = static_cast<int>(train_set.size() - steps_per_epoch * n);
  const int last_epoch = options.stop_after_epochs >= 0 ? std::min(cfg.epochs, options.stop_after_epochs) : cfg.epochs;

  ObjectiveConfig oc;
  oc.mode = cfg.mode;
  oc.alpha = cfg.alpha;
  oc.training = true;
  oc.samples_per_text = cfg.sampling.train_samples_per_text;

  for (auto epoch = static_cast<int>(ck.epochs_done); epoch < last_epoch; ++epoch) {
    const auto order = epoch_order(train_set.size(), cfg.seed, static_cast<std::uint64_t>(epoch));
    EpochLog log;
    log.epoch = epoch;
    log.dropped_pairs = dropped;
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      std::vector<PairRecord> batch;
      batch.reserve(n);
      for (std::size_t b = 0; b < n; ++b) batch.push_back(train_set[order[s * n + b]]);

      const auto step = static_cast<std::int64_t>(ck.step);
      SeededRng noise_rng(cfg.seed, substream({0x401531, ck.step}));
      const NoiseDraw noise = draw_noise(noise_rng, n, cfg.model.dim, oc, cfg.model.dropout);
      const BackwardResult br = backward(batch, ck.params, oc, noise);
      const auto& l = br.loss;
      if (!std::isfinite(l.l_total)) {
        throw TrainingDivergence("non-finite loss (l_s=" + std::to_string(l.l_s) + ", l_sup=" +
                                     std::to_string(l.l_sup) + ", l_ce=" + std::to_string(l.l_ce) + ")",
                                 step);
      }
      const GroupRates rates{lr_at(step, total, cfg, ParamGroup::kHead), lr_at(step, total, cfg, ParamGroup::kAdapter)};
      const auto views = trainable_parameters(ck.params, cfg.mode);
      adamw_step(views, br.gradients, ck.optimizer, rates, cfg.weight_decay);
      ++ck.step;

      log.mean_total += l.l_total;
      log.mean_s += l.l_s;
      log.mean_sup += l.l_sup;
      log.mean_ce += l.l_ce;
      log.lr_head = rates.head;
      log.lr_adapter = rates.adapter;
      if (log.trained.empty()) {
        for (const auto& v : views) log.trained.push_back(v.name);
      }
      ++log.steps;
    }
    const auto steps = static_cast<double>(log.steps);
    log.mean_total /= steps;
    log.mean_s /= steps;
    log.mean_sup /= steps;
    log.mean_ce /= steps;
    ck.epochs_done = static_cast<std::uint64_t>(epoch + 1);
    if (cfg.validate && !options.validation.empty()) {
      log.validation = evaluate_model(options.validation, ck.params, cfg.sampling, cfg.mode != TrainMode::kBaseline,
                                      cfg.seed);
    }
    if (options.on_epoch) options.on_epoch(log);
    result.log.push_back(std::move(log));
  }
  return result;
}

}  // namespace textmass
