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

#include "textmass/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "textmass/errors.hpp"

namespace textmass {

namespace {
constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double cosine_similarity(const Vec& a, const Vec& b) {
  require(a.size() == b.size(), "cosine_similarity: dimension mismatch " + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()));
  const double s = a.dot(b) / (a.norm() * b.norm() + kCosineGuard);
  return std::clamp(s, -1.0, 1.0);
}

Vec softmax(const Vec& logits, double scale) {
  require(logits.size() >= 1, "softmax: empty input");
  require(std::isfinite(scale), "softmax: non-finite scale");
  Vec z = logits * scale;
  const double m = z.maxCoeff();
  Vec e = (z.array() - m).exp().matrix();
  return e / e.sum();
}

void require_finite(const Vec& v, const char* what) {
  require(v.allFinite(), std::string(what) + ": non-finite entries");
}

void require_finite(const Mat& m, const char* what) {
  require(m.allFinite(), std::string(what) + ": non-finite entries");
}

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream),
      key_(splitmix64_mix(seed ^ splitmix64_mix(stream + 0x632BE59BD9B4E019ULL))) {}

std::uint64_t SeededRng::next_u64() {
  ++counter_;
  return splitmix64_mix(key_ + counter_ * kGoldenGamma);
}

double SeededRng::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::next_gaussian() {
  for (;;) {
    const double u = 2.0 * next_uniform() - 1.0;
    const double v = 2.0 * next_uniform() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

std::uint64_t substream(std::initializer_list<std::uint64_t> ids) {
  std::uint64_t h = 0x1F83D9ABFB41BD6BULL;
  for (const auto id : ids) h = splitmix64_mix(h ^ splitmix64_mix(id + kGoldenGamma));
  return h;
}

Vec sample_gaussian(SeededRng& rng, Eigen::Index d, const PriorSpec& prior) {
  require(d >= 1, "sample_gaussian: d must be >= 1");
  require(prior.kind == PriorKind::kStandardNormal, "sample_gaussian: only standard-normal is supported");
  Vec out(d);
  for (Eigen::Index i = 0; i < d; ++i) out[i] = rng.next_gaussian();
  return out;
}

Vec finite_diff_gradient(const ScalarFunction& f, const Vec& x, double h) {
  require(h > 0.0, "finite_diff_gradient: h must be positive");
  Vec g(x.size());
  Vec probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw OracleFailure("finite_diff_gradient: non-finite evaluation at coordinate " + std::to_string(i));
    }
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace textmass
