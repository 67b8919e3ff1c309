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

// Evaluation: the average relative CVaR regret against a sample-based oracle,
// and experiment runs that train every requested model per seed and report
// one CSV row per (model, alpha_eval, seed).

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gendfl/problems.hpp"
#include "gendfl/risk.hpp"
#include "gendfl/solver.hpp"
#include "gendfl/train.hpp"

namespace gendfl::eval {

using Vec = std::vector<double>;

// Worker count: GENDFL_THREADS if set to a positive integer, else the
// hardware concurrency (at least 1).
std::size_t thread_count();

// Runs fn(i) for i in [0, n) on up to thread_count() threads. The first
// exception thrown by any task is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

struct EvalConfig {
  std::vector<double> alpha_eval{0.5};
  std::size_t m = 2000;        // fresh conditional draws per held-out x
  std::size_t holdout = 100;   // held-out x per experiment
  std::vector<std::uint64_t> seeds{0};
  double min_denominator = 1e-9;
  solver::SolverConfig oracle;
};

void validate(const EvalConfig& cfg);  // throws ConfigError

// m draws of c | x as an m x d_c matrix, deterministic in seed.
using Sampler = std::function<Eigen::MatrixXd(const Vec& x, std::size_t m, std::uint64_t seed)>;

Sampler truth_sampler(const problems::GroundTruth& truth);
Sampler flow_sampler(const flow::FlowParams& q);

// One held-out x with its fresh draws and the oracle decision on them.
struct OracleCase {
  Vec x;
  Eigen::MatrixXd samples;
  Vec w_star;
  double expected_star = 0.0;  // mean of f(c, w_star) over the draws
};

// Draw seed for held-out instance i is seed * 1000003 + i.
std::vector<OracleCase> build_oracle(const problems::ProblemSpec& spec,
                                     const Eigen::MatrixXd& holdout_x,
                                     const Sampler& sampler, risk::RiskLevel alpha,
                                     std::size_t m, std::uint64_t seed,
                                     const solver::SolverConfig& cfg = {});

struct RegretResult {
  double percent = 0.0;        // mean of regret / |E f(c, w*)| * 100; NaN if none valid
  double mean_abs_regret = 0.0;  // mean CVaR regret over every case
  double min_regret = 0.0;     // smallest per-case CVaR regret
  std::size_t valid = 0;
  std::size_t skipped = 0;     // denominators below min_denominator
};

// decisions[i] is the model's decision for cases[i].
RegretResult score(const problems::ProblemSpec& spec,
                   const std::vector<OracleCase>& cases,
                   const std::vector<Vec>& decisions, risk::RiskLevel alpha,
                   double min_denominator = 1e-9);

using DecisionRule = std::function<Vec(const Vec& x, std::size_t index)>;

// build_oracle followed by score for one decision rule.
RegretResult relative_regret(const DecisionRule& model,
                             const problems::ProblemSpec& spec,
                             const Eigen::MatrixXd& holdout_x,
                             const Sampler& sampler, risk::RiskLevel alpha,
                             std::size_t m, std::uint64_t seed,
                             double min_denominator = 1e-9);

// ---- experiments -------------------------------------------------------------------

enum class ModelKind { kGenDfl, kPto, kCvarRegressor };

struct ModelSpec {
  std::string name;
  ModelKind kind = ModelKind::kGenDfl;
  std::optional<double> alpha_train;  // defaults to train.alpha
  std::optional<double> beta;         // defaults to train.beta (Gen-DFL only)
  std::optional<std::size_t> k;       // defaults to train.k (Gen-DFL only)
};

ModelKind parse_model_kind(const std::string& s);  // gendfl | pto | cvar-reg
std::string model_kind_name(ModelKind k);

struct ExperimentConfig {
  problems::Family family = problems::Family::kPortfolio;
  problems::GenConfig gen;
  std::string energy_csv;  // energy family: price file; empty uses synthetic days
  std::size_t energy_days = 400;
  train::TrainConfig train;
  EvalConfig eval;
  std::vector<ModelSpec> models;
};

// JSON schema (every key optional except models):
// {
//   "problem":   {"family": "portfolio", "energy_csv": "", "energy_days": 400},
//   "generator": {"n", "d_x", "d_c", "deg", "sigma", "factor_rank", "grid"},
//   "train":     {"lr", "epochs", "batch", "alpha", "k", "m_q", "beta", "gamma",
//                 "flow_layers", "flow_hidden", "s_max", "proxy_epochs",
//                 "proxy_lr", "proxy_val_frac", "proxy_patience", "mlp_epochs",
//                 "mlp_lr", "mlp_hidden", "unroll_steps", "solver_restarts",
//                 "solver_max_iter"},
//   "eval":      {"alpha_eval": [..], "m", "holdout", "seeds": [..] or "num_seeds"},
//   "models":    ["gendfl", "pto", {"name", "kind", "alpha_train", "beta", "k"}]
// }
// Unknown keys are a ConfigError so typos surface.
ExperimentConfig parse_experiment(const std::string& json_text);
ExperimentConfig load_experiment(const std::string& path);

// Training data and held-out features for one seed, exactly as
// run_experiment builds them. Synthetic families draw the held-out x from
// the generator; energy holds out the last eval.holdout day pairs.
struct SplitData {
  problems::Generated train;
  Eigen::MatrixXd holdout_x;
};
SplitData make_split(const ExperimentConfig& cfg, std::uint64_t seed);

// Oracle for one seed and alpha_eval. Energy needs the seed's proxy flow.
std::vector<OracleCase> experiment_oracle(const ExperimentConfig& cfg, const SplitData& split,
                                          std::uint64_t seed, double alpha_eval,
                                          const flow::FlowParams* proxy = nullptr);

// Held-out decisions of the three model kinds.
std::vector<Vec> decide_gendfl(const flow::FlowParams& theta, const problems::ProblemSpec& spec,
                               const Eigen::MatrixXd& holdout_x, double alpha_train,
                               std::size_t k, std::uint64_t seed,
                               const solver::SolverConfig& cfg);
std::vector<Vec> decide_point(const train::PredictorMLP& g, const problems::ProblemSpec& spec,
                              const Eigen::MatrixXd& holdout_x, const solver::SolverConfig& cfg);

struct RegretReport {
  std::string model;
  problems::Family family = problems::Family::kPortfolio;
  int deg = 0;
  double sigma = 0.0;
  double alpha_train = 0.0;
  double alpha_eval = 0.0;
  std::uint64_t seed = 0;
  double regret_pct = 0.0;
  double runtime_s = 0.0;
  // Diagnostics not written to the CSV.
  double mean_abs_regret = 0.0;
  double min_regret = 0.0;
  std::size_t valid = 0;
  std::size_t skipped = 0;
  std::string error;
};

struct SummaryRow {
  std::string model;
  problems::Family family = problems::Family::kPortfolio;
  int deg = 0;
  double sigma = 0.0;
  double alpha_train = 0.0;
  double alpha_eval = 0.0;
  std::size_t seeds = 0;       // rows with a finite regret
  double mean_pct = 0.0;
  double se_pct = 0.0;         // sample sd / sqrt(seeds); 0 for one seed
};

struct ExperimentResult {
  std::vector<RegretReport> rows;
  std::vector<SummaryRow> summary;
};

using Progress = std::function<void(const std::string&)>;

// Trains every model per seed and scores it on held-out x for each
// alpha_eval. A failing stage is recorded in its row (regret NaN) and the
// run continues. Synthetic families score against fresh conditional draws;
// energy scores against the seed's proxy flow.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Progress& progress = {});

// Runs independent cells on up to thread_count() workers. Rows keep cell
// order, so the output does not depend on scheduling.
ExperimentResult run_sweep(const std::vector<ExperimentConfig>& cells,
                           const Progress& progress = {});

std::vector<SummaryRow> summarize(const std::vector<RegretReport>& rows);

// CSV columns: model,family,deg,sigma,alpha_train,alpha_eval,seed,regret_pct,runtime_s
// preceded by one '#' comment line (free text such as a timestamp).
extern const char* const kReportHeader;
void write_report_csv(const std::string& path, const std::vector<RegretReport>& rows,
                      const std::string& comment = "");
std::string report_csv_body(const std::vector<RegretReport>& rows);
std::vector<RegretReport> read_report_csv(const std::string& path);  // SchemaError

// Summary columns: model,family,deg,sigma,alpha_train,alpha_eval,seeds,mean_regret_pct,se_regret_pct
void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);

// ---- sweeps ----------------------------------------------------------------------------

// Grid axes; an empty axis keeps the base value.
struct SweepGrid {
  std::vector<double> beta, alpha, sigma, k;
  std::vector<int> deg, d, n;
};

// Reads the "sweep" object of a config; without one every axis is empty.
SweepGrid parse_sweep(const std::string& json_text);
std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& base, const SweepGrid& grid);
// One line per planned cell.
std::string describe(const ExperimentConfig& cfg);

}  // namespace gendfl::eval
