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
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "textmass/config.hpp"
#include "textmass/dataset.hpp"
#include "textmass/evaluation.hpp"
#include "textmass/model.hpp"
#include "textmass/objectives.hpp"

namespace textmass {

struct TrainConfig {
  int batch_size = 32;  // N
  int epochs = 5;
  double lr_head = 1e-5;
  double lr_adapter = 1e-6;
  double weight_decay = 0.2;
  double warmup = 0.1;
  double alpha = 1.2;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::kTMass;
  ModelConfig model;
  SamplingConfig sampling;
  double theta_init = 0.0;
  bool theta_frozen = false;
  bool validate = true;
};

void validate_config(const TrainConfig& cfg);

KeyValues to_key_values(const TrainConfig& cfg);
/// Reads the training keys of `kv`; keys absent from `kv` keep their defaults.
TrainConfig train_config_from(const KeyValues& kv, TrainConfig base = {});
const std::set<std::string>& train_config_keys();

/// Parameters at step 0 for `cfg` (towers from cfg.seed, identity adapters and
/// fusion maps, zero radius weights, theta = cfg.theta_init).
ModelParameters initial_model(const TrainConfig& cfg);

/// Linear warm-up over the first warmup * total steps, then cosine decay to 0.
double lr_at(std::int64_t step, std::int64_t total_steps, const TrainConfig& cfg, ParamGroup group);

struct OptimizerState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  struct Slot {
    std::string name;
    Mat m;
    Mat v;
  };
  std::vector<Slot> slots;
  std::int64_t step = 0;

  Slot& slot(const std::string& name, Eigen::Index rows, Eigen::Index cols);
};

struct GroupRates {
  double head = 0.0;
  double adapter = 0.0;
};

/// One decoupled-weight-decay Adam update over `params` (weight decay is
/// skipped where ParamView::decay is false, i.e. for the logit scale).
void adamw_step(const std::vector<ParamView>& params, const GradientSet& grads, OptimizerState& state,
                GroupRates lr, double weight_decay);

struct EpochLog {
  int epoch = 0;
  int steps = 0;
  int dropped_pairs = 0;
  double mean_total = 0.0;
  double mean_s = 0.0;
  double mean_sup = 0.0;
  double mean_ce = 0.0;
  double lr_head = 0.0;     // rates used by the last step of the epoch
  double lr_adapter = 0.0;
  std::vector<std::string> trained;  // tensor names updated this epoch
  std::optional<EvaluationResult> validation;
};

struct Checkpoint {
  TrainConfig config;
  ModelParameters params;
  OptimizerState optimizer;
  std::uint64_t epochs_done = 0;
  std::uint64_t step = 0;
};

// TMCK: magic | u32 version | parameter table | optimizer table | config text |
// rng position (epochs completed, global step) as two u64.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct TrainOptions {
  const Checkpoint* resume = nullptr;
  int stop_after_epochs = -1;  // stop early but keep the full-length schedule
  std::span<const PairRecord> validation;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

/// Deterministic training loop. Each epoch shuffles the training set with a
/// seeded substream, drops the final partial batch, and draws the per-step
/// noise from a substream keyed by the global step.
TrainResult train(const TrainConfig& cfg, std::span<const PairRecord> train_set, const TrainOptions& options = {});

/// Paired evaluation of a model: best-of-M when use_sampling, else deterministic t.
EvaluationResult evaluate_model(std::span<const PairRecord> records, const ModelParameters& params,
                                const SamplingConfig& sampling, bool use_sampling, std::uint64_t seed);

}  // namespace textmass
