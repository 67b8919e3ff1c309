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

// Decision solvers: point-estimate solves, sample-based CVaR solves, and an
// unrolled differentiable variant of the latter.

#pragma once

#include <Eigen/Dense>

#include "gendfl/feasible.hpp"
#include "gendfl/ndgrad.hpp"
#include "gendfl/problems.hpp"
#include "gendfl/risk.hpp"

namespace gendfl::solver {

struct SolverConfig {
  int max_iter = 400;       // accelerated gradient iterations per restart
  int restarts = 8;         // smoothing levels; tau halves at each
  double tau_scale = 0.05;  // tau_0 = tau_scale * (IQR of initial losses)
  double tau_decay = 0.5;
  double tol = 1e-10;       // sup-norm step size that counts as converged
  int unroll_steps = 40;
};

void validate(const SolverConfig& cfg);  // throws ConfigError

struct Decision {
  Vec w;
  double eta = 0.0;        // empirical VaR of the losses at w
  double objective = 0.0;  // exact empirical CVaR (or f(c, w) for point solves)
  int iterations = 0;
  bool converged = false;
  double tau = 0.0;        // smoothing temperature of the final restart
};

// argmin_w f(c_hat, w). Linear objectives use exact combinatorial solvers
// (greedy fill for capacity and schedule sets, Dijkstra or DAG dynamic
// programming for grid flows); quadratic ones use accelerated projected
// gradient.
Decision solve_pointwise(const problems::ProblemSpec& spec, const Vec& c_hat,
                         const SolverConfig& cfg = {});

// argmin_w CVaR_alpha of f(c_k, w) over the rows of `samples` (K x d_c).
// alpha = 1 solves the averaged problem exactly. Otherwise the
// Rockafellar-Uryasev objective is smoothed with temperature tau, eta is
// eliminated in closed form, and accelerated projected gradient runs at a
// decreasing sequence of temperatures, warm-started. The iterate with the
// lowest exact empirical CVaR is returned. Deterministic.
Decision solve_cvar_saa(const problems::ProblemSpec& spec,
                        const Eigen::MatrixXd& samples, risk::RiskLevel alpha,
                        const SolverConfig& cfg = {});

struct UnrolledDecision {
  Decision decision;
  ndgrad::Var w;  // differentiable in `samples`
};

// Starts at the solve_cvar_saa solution (held constant) and records
// cfg.unroll_steps smoothed projected-gradient steps on the samples' graph.
UnrolledDecision solve_cvar_saa_unrolled(const problems::ProblemSpec& spec,
                                         ndgrad::Var samples,
                                         risk::RiskLevel alpha,
                                         const SolverConfig& cfg = {});

}  // namespace gendfl::solver
