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

// Empirical tail-risk measures.
//
// Convention: alpha in (0, 1] is the TAIL FRACTION. CVaR_alpha is the mean of
// the worst (largest) ceil(alpha * K) of K losses, so alpha = 1 gives the
// plain mean and alpha -> 0 approaches the worst case.

#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "gendfl/ndgrad.hpp"

namespace gendfl::risk {

class RiskLevel {
 public:
  explicit RiskLevel(double alpha);
  double value() const { return alpha_; }
  operator double() const { return alpha_; }

 private:
  double alpha_;
};

// ceil(alpha * K) clamped to [1, K]. A 1e-9 slack keeps products such as
// 0.3 * 10 from rounding up to 4.
std::size_t tail_size(std::size_t k, RiskLevel alpha);

// Indices of the tail_size largest losses. Ties at the boundary go to the
// lower sample index.
std::vector<std::size_t> tail_indices(std::span<const double> losses,
                                      RiskLevel alpha);

double empirical_var(std::span<const double> losses, RiskLevel alpha);
double empirical_cvar(std::span<const double> losses, RiskLevel alpha);

struct RuSolution {
  double value;
  double eta;
};

// eta + (1 / (alpha K)) * sum (loss - eta)_+
double ru_objective(std::span<const double> losses, RiskLevel alpha,
                    double eta);

// Exact minimiser of ru_objective. The minimum is attained at an order
// statistic, so every sample is scanned; among tied minimisers the largest
// eta is returned (it equals the VaR when alpha K is an integer).
RuSolution cvar_ru(std::span<const double> losses, RiskLevel alpha);

// 0.05 * (interquartile range + 1e-9).
double default_tau(std::span<const double> losses);

// eta + (1 / (alpha K)) * sum tau * softplus((loss - eta) / tau).
double smoothed_cvar_value(std::span<const double> losses, RiskLevel alpha,
                           double tau, double eta);
ndgrad::Var smoothed_cvar(ndgrad::Var losses, RiskLevel alpha, double tau,
                          ndgrad::Var eta);

// The eta that minimises smoothed_cvar_value for fixed losses. `hint` warm
// starts the safeguarded Newton iteration.
double smoothed_optimal_eta(
    std::span<const double> losses, RiskLevel alpha, double tau,
    double hint = std::numeric_limits<double>::quiet_NaN());

// sigmoid((loss - eta*(loss)) / tau) with eta* the smoothed optimum. The
// vector-Jacobian product accounts for eta*'s dependence on the losses, so
// gradients match the eta-eliminated smoothed CVaR exactly.
ndgrad::Var smoothed_tail_weights(ndgrad::Var losses, RiskLevel alpha,
                                  double tau);

// Empirical CVaR as a graph op; its gradient is 1/K_alpha on the tail set.
ndgrad::Var tail_mean(ndgrad::Var losses, RiskLevel alpha);

// Exact W1 between two equal-size empirical laws on the real line.
double wasserstein1_1d(std::span<const double> a, std::span<const double> b);

}  // namespace gendfl::risk
