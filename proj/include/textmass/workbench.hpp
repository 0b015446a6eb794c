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
#include <fstream>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "textmass/config.hpp"
#include "textmass/dataset.hpp"
#include "textmass/evaluation.hpp"
#include "textmass/trainer.hpp"

namespace textmass {

// Everything one CLI invocation needs. Serialised as flat `key = value` text;
// the training keys are shared with TrainConfig, dataset keys carry a `data.`
// prefix and share concept_dim with the model.
struct RunConfig {
  TrainConfig train;
  SyntheticSpec data;
  std::string data_dir;    // read a dataset directory instead of generating
  std::string checkpoint;  // eval / analyze input
  std::vector<std::uint64_t> seeds;  // ablations and sweeps; empty -> {train.seed}
  bool eval_sampling = true;         // false scores with the deterministic t
  int analyze_queries = 4;
};

const std::set<std::string>& run_config_keys();
RunConfig run_config_from(const KeyValues& kv, RunConfig base = {});
KeyValues to_key_values(const RunConfig& rc);

std::vector<std::uint64_t> effective_seeds(const RunConfig& rc);

/// Dataset for a run: read from data_dir when set, otherwise generated.
std::vector<PairRecord> load_records(const RunConfig& rc);

struct MetricsRow {
  std::string config;
  std::string seed;  // decimal seed, or "median"
  RetrievalMetrics metrics;
};

/// Header `config,seed,direction,r1,r5,r10,mdr,mnr`, six decimals.
void write_run_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);

/// Per-metric median over the rows sharing a config, in first-seen order.
std::vector<MetricsRow> median_rows(const std::vector<MetricsRow>& rows);

struct AblationCell {
  std::string label;
  TrainConfig config;  // seed is overwritten per run
};

/// baseline, fixed-mean, scalar, linear.
std::vector<AblationCell> radius_ablation_cells(const TrainConfig& base);
/// ce, ce+s, s, s+sup.
std::vector<AblationCell> loss_ablation_cells(const TrainConfig& base);
/// One t-mass cell per alpha in {0.5, 0.8, 1.0, 1.2, 1.5}.
std::vector<AblationCell> alpha_sweep_cells(const TrainConfig& base);

/// Progress sink; the CLI routes it into the run log.
using LogFn = std::function<void(const std::string&)>;

/// Trains and evaluates every cell for every seed (text-to-video rows), then
/// appends one median row per cell.
std::vector<MetricsRow> ablation_matrix(const RunConfig& rc, const std::vector<AblationCell>& cells,
                                        std::span<const PairRecord> train_set,
                                        std::span<const PairRecord> test_set, const LogFn& log = {});

/// One trained t-mass model per seed, scored with sampling off and M in
/// {5, 10, 20}; text-to-video rows.
std::vector<MetricsRow> sweep_trials(const RunConfig& rc, std::span<const PairRecord> train_set,
                                     std::span<const PairRecord> test_set, const LogFn& log = {});

// A fresh `<root>/<command>-NNN` directory; existing directories are never reused.
class RunDirectory {
 public:
  static RunDirectory create(const std::filesystem::path& root, const std::string& command);

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

  /// Appends a UTC-timestamped line to run.log, the only file carrying wall-clock time.
  void log(const std::string& message);

 private:
  std::filesystem::path path_;
};

void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Entry point of the `textmass` tool. Exit codes: 0 success, 1 contract
/// violation or bad usage, 2 I/O or format error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace textmass
