// Copyright 2026 The gendfl Authors
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

// Numerical checks of the risk-measure facts the method relies on. Failures
// are report entries, never exceptions.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gendfl::theory {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;  // one line with the measured quantities
  double seconds = 0.0;
};

// Max |cvar_ru - empirical_cvar| over `trials` random loss vectors with
// alpha K integral. Passes below 1e-9.
CheckResult ru_identity(std::size_t trials = 1000, std::uint64_t seed = 0);

// Uniform[0, 1] losses at alpha = 0.1 (true CVaR 0.95). Least-squares slope
// of log mean |error| against log n over n in {1e2, 1e3, 1e4, 1e5}. Passes
// when the slope lies in [-0.65, -0.35].
struct SlopeResult {
  std::vector<double> n;
  std::vector<double> mean_abs_error;
  double slope = 0.0;
};
SlopeResult cvar_error_slope(std::size_t replicates = 200, std::uint64_t seed = 0);
CheckResult cvar_slope(std::size_t replicates = 200, std::uint64_t seed = 0);

// Surrogate-loss bound on 1-D Gaussian conditional laws. The objective is
// f(c, w) = -c w + w^2 / 2 on w in [0, 1], so L_f = sup |df/dc| = 1. For
// each pair (p, q) and a fixed decision rule w_hat(x), the regret
//   l(p) = mean_x CVaR_alpha,p[f(c, w_hat) - f(c, w*)]
// is compared with 2 L_f mean_x W1(p(.|x), q(.|x)), where w*(x) is the
// p-optimal decision used in both regrets and W1 is the empirical distance.
struct BoundCase {
  double gap = 0.0;    // |l(p) - l(q)|
  double bound = 0.0;  // 2 L_f E_x W1
  double alpha = 1.0;
};
struct BoundResult {
  std::vector<BoundCase> cases;
  std::size_t violations = 0;
  double max_ratio = 0.0;  // max gap / bound over cases with bound > 0
};
// `pairs` random Gaussian pairs, each at alpha in {0.5, 1}.
BoundResult surrogate_bound_random(std::size_t pairs = 100, std::uint64_t seed = 0);
// q is p translated by delta; W1 equals delta.
BoundResult surrogate_bound_translated(const std::vector<double>& deltas, std::uint64_t seed = 0);
CheckResult surrogate_bound(std::size_t pairs = 100, std::uint64_t seed = 0);

// Monotonicity, translation invariance, positive homogeneity and
// subadditivity of the empirical CVaR on random samples.
CheckResult coherence(std::size_t trials = 500, std::uint64_t seed = 0);

std::vector<CheckResult> run_suite(std::uint64_t seed = 0);

}  // namespace gendfl::theory
