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


#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <algorithm>
#include <limits>

#include "textmass/errors.hpp"
#include "textmass/trainer.hpp"

using namespace textmass;

namespace {

TrainConfig smoke_config() {
  TrainConfig c;
  c.batch_size = 8;
  c.epochs = 2;
  c.lr_head = 1e-2;
  c.lr_adapter = 1e-3;
  c.model.dim = 16;
  c.model.concept_dim = 8;
  c.model.sampled_frames = 4;
  c.validate = false;
  return c;
}

std::vector<PairRecord> smoke_data(int pairs = 64) {
  SyntheticSpec s;
  s.train_pairs = pairs;
  s.test_pairs = 16;
  s.concept_dim = 8;
  s.frames = 8;
  return generate(s);
}

bool same_params(const ModelParameters& a, const ModelParameters& b) {
  ModelParameters x = a, y = b;
  const auto va = all_parameters(x), vb = all_parameters(y);
  if (va.size() != vb.size()) return false;
  for (std::size_t i = 0; i < va.size(); ++i) {
    if (va[i].name != vb[i].name || va[i].size() != vb[i].size()) return false;
    for (Eigen::Index k = 0; k < va[i].size(); ++k)
      if (std::bit_cast<std::uint64_t>(va[i].data[k]) != std::bit_cast<std::uint64_t>(vb[i].data[k])) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("learning-rate schedule") {
  TrainConfig c;
  c.lr_head = 3e-5;
  c.lr_adapter = 1e-6;
  CHECK(lr_at(0, 100, c, ParamGroup::kHead) == 0.0);
  CHECK(lr_at(10, 100, c, ParamGroup::kHead) == 3e-5);
  CHECK(lr_at(10, 100, c, ParamGroup::kAdapter) == 1e-6);
  CHECK(std::abs(lr_at(100, 100, c, ParamGroup::kHead)) <= 1e-12);
  CHECK(lr_at(5, 100, c, ParamGroup::kHead) == doctest::Approx(1.5e-5));
  CHECK(lr_at(55, 100, c, ParamGroup::kHead) == doctest::Approx(1.5e-5));
  double prev = 1.0;
  for (int s = 10; s <= 100; ++s) {
    const double lr = lr_at(s, 100, c, ParamGroup::kHead);
    CHECK(lr <= prev);
    prev = lr;
  }
  CHECK_THROWS_AS(lr_at(101, 100, c, ParamGroup::kHead), ContractViolation);
}

TEST_CASE("config validation") {
  TrainConfig c;
  CHECK_NOTHROW(validate_config(c));
  c.warmup = 1.0;
  CHECK_THROWS_AS(validate_config(c), ContractViolation);
  c = {};
  c.lr_head = 0.0;
  CHECK_THROWS_AS(validate_config(c), ContractViolation);
  c = {};
  c.sampling.trials = 0;
  CHECK_THROWS_AS(validate_config(c), ContractViolation);
}

TEST_CASE("config keys round-trip") {
  TrainConfig c;
  c.mode = TrainMode::kCePlusS;
  c.model.radius = RadiusVariant::kScalar;
  c.lr_head = 3e-5;
  c.seed = 99;
  c.theta_frozen = true;
  const TrainConfig back = train_config_from(to_key_values(c));
  CHECK(to_key_values(back).to_text() == to_key_values(c).to_text());
  const KeyValues kv = to_key_values(c);
  for (const auto& [k, v] : kv.entries()) CHECK(train_config_keys().count(k) == 1);
}

TEST_CASE("adamw: zero gradient and zero decay leave parameters alone") {
  double p = 0.75;
  std::vector<ParamView> views = {{"w", ParamGroup::kHead, &p, 1, 1, true, true}};
  GradientSet g;
  g.entries.push_back({"w", Mat::Zero(1, 1)});
  OptimizerState st;
  adamw_step(views, g, st, {0.1, 0.1}, 0.0);
  CHECK(p == 0.75);
  CHECK(st.step == 1);
}

TEST_CASE("adamw: one hand-stepped iteration") {
  const double g = -0.3, lr = 0.01, wd = 0.2, p0 = 0.5;
  double p = p0;
  std::vector<ParamView> views = {{"w", ParamGroup::kHead, &p, 1, 1, true, true}};
  GradientSet gs;
  gs.entries.push_back({"w", Mat::Constant(1, 1, g)});
  OptimizerState st;
  adamw_step(views, gs, st, {lr, 0.0}, wd);
  const double m = 0.1 * g, v = 0.001 * g * g;
  const double mhat = m / (1.0 - 0.9), vhat = v / (1.0 - 0.999);
  const double want = p0 - lr * mhat / (std::sqrt(vhat) + 1e-8) - lr * wd * p0;
  CHECK(std::abs(p - want) <= 1e-12);
}

TEST_CASE("adamw: groups and the decay flag") {
  double head = 1.0, adapter = 1.0, scale = 1.0;
  std::vector<ParamView> views = {{"h", ParamGroup::kHead, &head, 1, 1, true, true},
                                  {"a", ParamGroup::kAdapter, &adapter, 1, 1, true, true},
                                  {"s", ParamGroup::kHead, &scale, 1, 1, false, true}};
  GradientSet gs;
  for (const char* n : {"h", "a", "s"}) gs.entries.push_back({n, Mat::Zero(1, 1)});
  OptimizerState st;
  adamw_step(views, gs, st, {0.1, 0.01}, 0.5);
  CHECK(head == doctest::Approx(1.0 - 0.1 * 0.5));
  CHECK(adapter == doctest::Approx(1.0 - 0.01 * 0.5));
  CHECK(scale == 1.0);
}

TEST_CASE("adamw: non-finite gradients abort") {
  double p = 1.0;
  std::vector<ParamView> views = {{"w", ParamGroup::kHead, &p, 1, 1, true, true}};
  GradientSet gs;
  gs.entries.push_back({"w", Mat::Constant(1, 1, std::numeric_limits<double>::quiet_NaN())});
  OptimizerState st;
  CHECK_THROWS_AS(adamw_step(views, gs, st, {0.1, 0.1}, 0.0), TrainingDivergence);
}

TEST_CASE("adamw: 100 identical steps are bit-identical") {
  auto run = [] {
    double w[3] = {0.1, -0.2, 0.3};
    std::vector<ParamView> views = {{"w", ParamGroup::kHead, w, 3, 1, true, true}};
    OptimizerState st;
    for (int k = 0; k < 100; ++k) {
      GradientSet gs;
      Mat g(3, 1);
      g << w[0] - 1.0, 2.0 * w[1], std::sin(w[2]);
      gs.entries.push_back({"w", g});
      adamw_step(views, gs, st, {1e-2, 1e-2}, 0.1);
    }
    return std::vector<double>(w, w + 3);
  };
  const auto a = run(), b = run();
  for (int i = 0; i < 3; ++i) CHECK(std::bit_cast<std::uint64_t>(a[i]) == std::bit_cast<std::uint64_t>(b[i]));
}

TEST_CASE("zero epochs return the initial model") {
  TrainConfig c = smoke_config();
  c.epochs = 0;
  const auto data = select_split(smoke_data(), Split::kTrain);
  const TrainResult r = train(c, data);
  CHECK(r.log.empty());
  CHECK(same_params(r.checkpoint.params, initial_model(c)));
}

TEST_CASE("initial model: identity adapters, zero radius, default logit scale") {
  TrainConfig c = smoke_config();
  const ModelParameters m = initial_model(c);
  CHECK(m.encoders.text_adapter == Mat::Identity(16, 16));
  CHECK(m.fusion.query == Mat::Identity(16, 16));
  CHECK(m.radius.weights == Mat::Zero(4, 16));
  CHECK(m.logit_scale.log_lambda == default_log_lambda());
  c.model.radius = RadiusVariant::kScalar;
  c.theta_init = 1.0;
  CHECK(initial_model(c).radius.theta == 1.0);
}

TEST_CASE("smoke training lowers the loss") {
  const auto data = select_split(smoke_data(), Split::kTrain);
  const TrainResult r = train(smoke_config(), data);
  REQUIRE(r.log.size() == 2);
  CHECK(r.log.back().mean_total < r.log.front().mean_total);
  CHECK(r.log[0].steps == 8);
  CHECK(r.log[0].dropped_pairs == 0);
}

TEST_CASE("partial batches are dropped and logged") {
  TrainConfig c = smoke_config();
  c.epochs = 1;
  const auto data = select_split(smoke_data(70), Split::kTrain);
  const TrainResult r = train(c, data);
  CHECK(r.log[0].steps == 8);
  CHECK(r.log[0].dropped_pairs == 6);
  CHECK(r.checkpoint.step == 8);
}

TEST_CASE("trained tensors follow the mode") {
  const auto data = select_split(smoke_data(), Split::kTrain);
  TrainConfig c = smoke_config();
  c.epochs = 1;
  c.mode = TrainMode::kBaseline;
  const TrainResult b = train(c, data);
  for (const auto& n : b.log[0].trained) CHECK(n.rfind("radius.", 0) != 0);
  CHECK(b.checkpoint.params.radius.weights == Mat::Zero(4, 16));

  c.mode = TrainMode::kTMass;
  const TrainResult t = train(c, data);
  const auto& names = t.log[0].trained;
  CHECK(std::find(names.begin(), names.end(), "radius.weights") != names.end());
  CHECK(std::find(names.begin(), names.end(), "encoder.text_projection") == names.end());
}

TEST_CASE("theta frozen stays put") {
  const auto data = select_split(smoke_data(), Split::kTrain);
  TrainConfig c = smoke_config();
  c.epochs = 1;
  c.model.radius = RadiusVariant::kScalar;
  c.theta_init = 1.0;
  c.theta_frozen = true;
  const TrainResult r = train(c, data);
  CHECK(r.checkpoint.params.radius.theta == 1.0);
  const auto& names = r.log[0].trained;
  CHECK(std::find(names.begin(), names.end(), "radius.theta") == names.end());
}

TEST_CASE("logged rates come from the group schedules") {
  const auto data = select_split(smoke_data(), Split::kTrain);
  const TrainConfig c = smoke_config();
  const TrainResult r = train(c, data);
  const std::int64_t total = 16;
  CHECK(r.log[0].lr_head == lr_at(7, total, c, ParamGroup::kHead));
  CHECK(r.log[0].lr_adapter == lr_at(7, total, c, ParamGroup::kAdapter));
  CHECK(r.log[1].lr_head == lr_at(15, total, c, ParamGroup::kHead));
}

TEST_CASE("training is bit-reproducible") {
  const auto data = select_split(smoke_data(), Split::kTrain);
  const TrainResult a = train(smoke_config(), data), b = train(smoke_config(), data);
  CHECK(encode_checkpoint(a.checkpoint) == encode_checkpoint(b.checkpoint));
  CHECK(a.log[1].mean_total == b.log[1].mean_total);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  const auto data = select_split(smoke_data(), Split::kTrain);
  const TrainResult r = train(smoke_config(), data);
  const auto bytes = encode_checkpoint(r.checkpoint);
  const Checkpoint back = decode_checkpoint(bytes);
  CHECK(same_params(back.params, r.checkpoint.params));
  CHECK(back.step == r.checkpoint.step);
  CHECK(back.epochs_done == 2);
  CHECK(back.optimizer.step == r.checkpoint.optimizer.step);
  CHECK(encode_checkpoint(back) == bytes);

  const auto path = std::filesystem::temp_directory_path() / "textmass_trainer_ck.tmck";
  save_checkpoint(path, r.checkpoint);
  CHECK(encode_checkpoint(load_checkpoint(path)) == bytes);
  CHECK_THROWS_AS(load_checkpoint(path.string() + ".missing"), IoError);
}

TEST_CASE("corrupt checkpoints are format errors") {
  const auto data = select_split(smoke_data(), Split::kTrain);
  TrainConfig c = smoke_config();
  c.epochs = 0;
  auto bytes = encode_checkpoint(train(c, data).checkpoint);
  auto bad = bytes;
  bad[0] ^= 0xFF;
  CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);
  bad = bytes;
  bad.resize(bytes.size() / 2);
  CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);
}

TEST_CASE("resume equivalence: 1 + 1 epochs equals 2 epochs") {
  const auto data = select_split(smoke_data(), Split::kTrain);
  const TrainConfig c = smoke_config();
  const TrainResult full = train(c, data);

  TrainOptions first;
  first.stop_after_epochs = 1;
  const TrainResult half = train(c, data, first);
  CHECK(half.checkpoint.epochs_done == 1);
  const Checkpoint restored = decode_checkpoint(encode_checkpoint(half.checkpoint));
  TrainOptions second;
  second.resume = &restored;
  const TrainResult rest = train(c, data, second);
  CHECK(encode_checkpoint(rest.checkpoint) == encode_checkpoint(full.checkpoint));
  REQUIRE(rest.log.size() == 1);
  CHECK(rest.log[0].mean_total == full.log[1].mean_total);
}

TEST_CASE("resume refuses a different config") {
  const auto data = select_split(smoke_data(), Split::kTrain);
  TrainConfig c = smoke_config();
  TrainOptions first;
  first.stop_after_epochs = 1;
  const TrainResult half = train(c, data, first);
  c.alpha = 0.5;
  TrainOptions second;
  second.resume = &half.checkpoint;
  CHECK_THROWS_AS(train(c, data, second), ContractViolation);
}

TEST_CASE("too few pairs for a batch is a contract violation") {
  TrainConfig c = smoke_config();
  c.batch_size = 128;
  CHECK_THROWS_AS(train(c, select_split(smoke_data(), Split::kTrain)), ContractViolation);
}

TEST_CASE("validation runs once per epoch when enabled") {
  const auto all = smoke_data();
  const auto tr = select_split(all, Split::kTrain), te = select_split(all, Split::kTest);
  TrainConfig c = smoke_config();
  c.validate = true;
  TrainOptions opt;
  opt.validation = te;
  int seen = 0;
  opt.on_epoch = [&](const EpochLog& e) {
    CHECK(e.validation.has_value());
    ++seen;
  };
  train(c, tr, opt);
  CHECK(seen == 2);
}
