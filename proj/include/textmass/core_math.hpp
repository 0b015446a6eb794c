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
#include <functional>
#include <initializer_list>

#include <Eigen/Dense>

namespace textmass {

// Embeddings (t, v, f_i, t_s, t_sup) are dense double-precision column vectors.
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kCosineGuard = 1e-12;

/// Cosine similarity <a,b> / (|a||b| + 1e-12), clamped to [-1, 1].
double cosine_similarity(const Vec& a, const Vec& b);

/// Numerically stable softmax of scale * logits (max subtracted first).
Vec softmax(const Vec& logits, double scale = 1.0);

/// Throws ContractViolation unless every entry is finite.
void require_finite(const Vec& v, const char* what);
void require_finite(const Mat& m, const char* what);

/// Counter-based generator: draw k is SplitMix64's finalizer applied to
/// key(seed, stream) + (k + 1) * golden-gamma. The full position of the
/// stream is therefore the single counter, which makes checkpointing and
/// replay trivial.
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double next_uniform();
  /// Standard normal via the Marsaglia polar method; the second variate of
  /// each accepted pair is discarded so no hidden cache state exists.
  double next_gaussian();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }
  void set_counter(std::uint64_t counter) { counter_ = counter; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Derives a stream id from a tuple of ids (e.g. {tag, query, candidate}).
std::uint64_t substream(std::initializer_list<std::uint64_t> ids);

std::uint64_t splitmix64_mix(std::uint64_t z);

enum class PriorKind { kStandardNormal };

struct PriorSpec {
  PriorKind kind = PriorKind::kStandardNormal;
  bool per_component = true;
};

/// d independent draws from the prior.
Vec sample_gaussian(SeededRng& rng, Eigen::Index d, const PriorSpec& prior = {});

using ScalarFunction = std::function<double(const Vec&)>;

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
Vec finite_diff_gradient(const ScalarFunction& f, const Vec& x, double h = 1e-4);

}  // namespace textmass
