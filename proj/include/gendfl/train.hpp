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

// Gen-DFL training: a frozen NLL-fitted proxy q(c|x), the CVaR regret of
// decisions made on p_theta samples scored under q, and the combined loss
//   beta * mean regret + gamma * NLL.
// Also the two point-estimate baselines: an MSE predictor (predict then
// optimize) and a per-coordinate Rockafellar-Uryasev regressor.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gendfl/flow.hpp"
#include "gendfl/ndgrad.hpp"
#include "gendfl/problems.hpp"
#include "gendfl/risk.hpp"
#include "gendfl/solver.hpp"

namespace gendfl::train {

using Vec = std::vector<double>;

struct TrainConfig {
  double lr = 1e-3;        // Gen-DFL Adam learning rate
  int epochs = 10;
  std::size_t batch = 32;
  double alpha = 0.5;      // training risk level (tail fraction)
  std::size_t k = 64;      // p_theta samples per inner solve
  std::size_t m_q = 256;   // proxy samples per regret estimate
  double beta = 10.0;      // regret weight
  double gamma = 1.0;      // NLL weight
  std::uint64_t seed = 0;
  solver::SolverConfig solver;

  // Flow architecture shared by q and p_theta.
  std::size_t flow_layers = 4;
  std::size_t flow_hidden = 64;
  double s_max = 3.0;

  // Proxy fit (NLL only).
  int proxy_epochs = 100;
  double proxy_lr = 5e-3;
  double proxy_val_frac = 0.2;  // rows held out for early stopping
  int proxy_patience = 15;      // epochs without validation improvement

  // Point-estimate baselines.
  int mlp_epochs = 200;
  double mlp_lr = 1e-3;
  std::size_t mlp_hidden = 32;

  // JSON-lines log, one record per epoch; empty disables it.
  std::string log_path;
};

void validate(const TrainConfig& cfg);  // throws ConfigError

// Row i of a matrix as a std::vector.
Vec row(const Eigen::MatrixXd& m, Eigen::Index i);

// ---- proxy ---------------------------------------------------------------------

struct ProxyModel {
  flow::FlowParams q;                    // frozen after fitting
  double alpha = 1.0;                    // risk level of the cached decisions
  Eigen::MatrixXd x;                     // training features, one row per x
  std::vector<Eigen::MatrixXd> samples;  // m_q draws of q(c | x_i)
  std::vector<Vec> w_star;               // CVaR-SAA decision on samples[i]
};

// NLL-only flow fit on (x, c) with minibatch Adam. A seeded proxy_val_frac
// share of the rows is held out; the parameters with the best held-out NLL
// are returned and training stops after proxy_patience epochs without
// improvement. `trace` receives the per-epoch training NLL.
flow::FlowParams fit_nll(const problems::Dataset& data, const TrainConfig& cfg,
                         int epochs, double lr,
                         std::vector<double>* trace = nullptr);

// Fits q, freezes it, then draws m_q samples per training x and caches the
// alpha-CVaR decision on them.
ProxyModel train_proxy(const problems::Dataset& data,
                       const problems::ProblemSpec& spec,
                       const TrainConfig& cfg);

// Builds the decision cache for an already fitted q at cfg.alpha.
ProxyModel build_proxy(const flow::FlowParams& q, const problems::Dataset& data,
                       const problems::ProblemSpec& spec, const TrainConfig& cfg);

// Re-solves cache entry i from its cached samples.
solver::Decision recompute_proxy_decision(const ProxyModel& proxy,
                                          const problems::ProblemSpec& spec,
                                          std::size_t i,
                                          const solver::SolverConfig& cfg);

// ---- Gen-DFL ---------------------------------------------------------------------

// CVaR_alpha over the q samples of f(c, w_hat) - f(c, w*_q), where w_hat is
// the unrolled CVaR-SAA decision on k reparameterised samples of p_theta at
// x. Gradients reach theta only through the samples. The q samples and w*_q
// are supplied by the caller (a ProxyModel cache entry or fresh draws).
struct RegretTerm {
  ndgrad::Var regret;  // scalar
  Vec w_hat;
};
RegretTerm regret_theta_q(const flow::BoundFlow& theta, const Vec& x,
                          const Eigen::MatrixXd& q_samples, const Vec& w_star_q,
                          const problems::ProblemSpec& spec,
                          risk::RiskLevel alpha, std::size_t k,
                          std::mt19937_64& rng,
                          const solver::SolverConfig& solver_cfg);

// Same, scored on fresh draws: m_q samples of q at x and their decision.
RegretTerm regret_theta_q(const flow::BoundFlow& theta, const Vec& x,
                          const ProxyModel& proxy,
                          const problems::ProblemSpec& spec,
                          risk::RiskLevel alpha, std::size_t k, std::size_t m_q,
                          std::mt19937_64& rng,
                          const solver::SolverConfig& solver_cfg);

struct LossTerms {
  ndgrad::Var loss;
  double nll = 0.0;
  double mean_regret = 0.0;  // NaN when beta = 0 (regret not evaluated)
};

// beta * (1/|batch|) sum_i regret(x_i) + gamma * NLL(batch). `batch` indexes
// rows of data, which must be the proxy's training set.
LossTerms gendfl_loss(const flow::BoundFlow& theta,
                      std::span<const std::size_t> batch,
                      const problems::Dataset& data, const ProxyModel& proxy,
                      const problems::ProblemSpec& spec, const TrainConfig& cfg,
                      std::mt19937_64& rng);

struct EpochRecord {
  int epoch = 0;
  double nll = 0.0;
  double mean_regret = 0.0;
  double loss = 0.0;
  double wall_ms = 0.0;
  int skipped_steps = 0;
};

struct GenDflResult {
  flow::FlowParams theta;
  std::vector<EpochRecord> trace;
};

// Starts from the proxy's parameters. A step whose loss or gradient is
// non-finite is skipped and the learning rate is halved for the next 10
// steps. Deterministic per cfg.seed.
GenDflResult train_gendfl(const problems::Dataset& data,
                          const problems::ProblemSpec& spec,
                          const ProxyModel& proxy, const TrainConfig& cfg);

// alpha-CVaR decision on k samples of the flow at x.
solver::Decision gendfl_decide(const flow::FlowParams& theta,
                               const problems::ProblemSpec& spec, const Vec& x,
                               risk::RiskLevel alpha, std::size_t k,
                               std::uint64_t seed,
                               const solver::SolverConfig& cfg = {});

// ---- point-estimate baselines ------------------------------------------------------

// x -> tanh(x W1 + b1) W2 + b2. W2 starts at zero, so a fresh predictor is
// the constant b2 (set to the target column means before fitting).
struct PredictorMLP {
  std::size_t d_x = 0, d_c = 0, hidden = 0;
  ndgrad::ParamMap params;  // "w1", "b1", "w2", "b2"

  Vec predict(const Vec& x) const;
  Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const;
};

PredictorMLP init_mlp(std::size_t d_x, std::size_t d_c, std::size_t hidden,
                      std::uint64_t seed);

// Two-stage baseline: MSE regression of c on x.
PredictorMLP train_pto(const problems::Dataset& data, const TrainConfig& cfg);

// Empirical RU risk of a constant prediction g on scalar targets:
// mean of g + (1 / alpha) (y - g)_+.
double ru_risk(std::span<const double> targets, double g, risk::RiskLevel alpha);

// Per-coordinate RU regression of y_j = sign * c_j (the loss carried by one
// unit of w_j). The returned MLP predicts a cost vector ready for
// solve_pointwise: its output is already mapped back by the sign.
PredictorMLP train_cvar_regressor(const problems::Dataset& data,
                                  const problems::ProblemSpec& spec,
                                  risk::RiskLevel alpha, const TrainConfig& cfg);

// Mean over rows of the per-coordinate RU risk of the regressor's targets.
double regressor_ru_risk(const PredictorMLP& g, const problems::Dataset& data,
                         const problems::ProblemSpec& spec,
                         risk::RiskLevel alpha);

// JSON checkpoint for predictors, same conventions as flow checkpoints.
void save_mlp(const std::string& path, const PredictorMLP& m);
PredictorMLP load_mlp(const std::string& path);

}  // namespace gendfl::train
