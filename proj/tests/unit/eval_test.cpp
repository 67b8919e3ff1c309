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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gendfl/errors.hpp"
#include "gendfl/eval.hpp"
#include "gendfl/theory.hpp"

namespace gendfl::eval {
namespace {

namespace fs = std::filesystem;

std::string tmp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("gendfl_eval_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small but complete experiment: every stage runs, each seed takes well
// under a second.
const char* kTinyConfig = R"({
  "problem": {"family": "portfolio"},
  "generator": {"n": 48, "d_x": 3, "d_c": 4, "deg": 2, "sigma": 1},
  "train": {"epochs": 1, "k": 8, "m_q": 32, "proxy_epochs": 8, "mlp_epochs": 20,
            "flow_hidden": 8, "solver_restarts": 3, "solver_max_iter": 80,
            "unroll_steps": 4, "batch": 16},
  "eval": {"alpha_eval": [0.5], "m": 100, "holdout": 6, "num_seeds": 10},
  "models": ["gendfl", "pto"]
})";

problems::Generated portfolio(double sigma, std::uint64_t seed, std::size_t d_c = 10) {
  problems::GenConfig g;
  g.n = 10;
  g.d_c = d_c;
  g.sigma = sigma;
  g.seed = seed;
  return problems::generate(problems::Family::kPortfolio, g);
}

// Drops the runtime_s column, the only wall-clock field.
std::string strip_runtime(const std::string& body) {
  std::istringstream in(body);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + '\n';
  return out;
}

TEST(Metric, OracleDecisionsScoreZero) {
  const auto gen = portfolio(5.0, 1);
  const auto hold = problems::resample(*gen.data.truth, 5, 9);
  const auto cases =
      build_oracle(gen.spec, hold.x, truth_sampler(*gen.data.truth), risk::RiskLevel(0.5), 200, 4);
  std::vector<Vec> d;
  for (const auto& c : cases) d.push_back(c.w_star);
  const RegretResult r = score(gen.spec, cases, d, risk::RiskLevel(0.5));
  EXPECT_EQ(r.mean_abs_regret, 0.0);
  if (r.valid > 0) {
    EXPECT_EQ(r.percent, 0.0);
  }
  EXPECT_EQ(r.valid + r.skipped, 5u);
}

TEST(Metric, DeterministicLinearClosedForm) {
  // sigma = 0 makes c | x deterministic and the portfolio objective linear.
  const auto gen = portfolio(0.0, 2);
  const auto& truth = *gen.data.truth;
  const auto hold = problems::resample(truth, 8, 5);
  const std::size_t d = gen.spec.d_c;
  const Vec uniform(d, 1.0 / static_cast<double>(d));
  const RegretResult r = relative_regret([&](const Vec&, std::size_t) { return uniform; },
                                         gen.spec, hold.x, truth_sampler(truth),
                                         risk::RiskLevel(1.0), 150, 3);
  // Capped simplex, f = -c^T w: the optimum backs the best asset if it pays.
  double sum = 0.0;
  std::size_t valid = 0;
  for (Eigen::Index i = 0; i < hold.x.rows(); ++i) {
    const Vec c = problems::conditional_mean(truth, train::row(hold.x, i));
    double best = 0.0, mean = 0.0;
    for (double v : c) {
      best = std::max(best, v);
      mean += v / static_cast<double>(d);
    }
    const double f_star = -best, f_hat = -mean;
    if (std::abs(f_star) < 1e-9) continue;
    sum += (f_hat - f_star) / std::abs(f_star) * 100.0;
    ++valid;
  }
  ASSERT_GT(valid, 0u);
  EXPECT_EQ(r.valid, valid);
  EXPECT_NEAR(r.percent, sum / static_cast<double>(valid), 1e-6);
}

TEST(Metric, OracleSelfConsistencyBelowHalfPercent) {
  // Two oracles on independent M = 2000 draws, portfolio d_c = 10.
  const auto gen = portfolio(1.0, 3);
  const auto hold = problems::resample(*gen.data.truth, 20, 11);
  const auto sampler = truth_sampler(*gen.data.truth);
  const risk::RiskLevel alpha(1.0);
  const auto first = build_oracle(gen.spec, hold.x, sampler, alpha, 2000, 1);
  const auto second = build_oracle(gen.spec, hold.x, sampler, alpha, 2000, 2);
  std::vector<Vec> d;
  for (const auto& c : first) d.push_back(c.w_star);
  const RegretResult r = score(gen.spec, second, d, alpha);
  EXPECT_EQ(r.skipped, 0u);
  EXPECT_GE(r.percent, -0.1);
  EXPECT_LE(r.percent, 0.5);
}

TEST(Metric, TinyDenominatorsAreSkippedAndCounted) {
  const auto gen = portfolio(1.0, 4, 4);
  const auto hold = problems::resample(*gen.data.truth, 3, 2);
  auto cases =
      build_oracle(gen.spec, hold.x, truth_sampler(*gen.data.truth), risk::RiskLevel(1.0), 100, 1);
  cases[1].expected_star = 1e-12;
  std::vector<Vec> d(cases.size(), Vec(4, 0.25));
  const RegretResult r = score(gen.spec, cases, d, risk::RiskLevel(1.0));
  EXPECT_EQ(r.skipped, 1u);
  EXPECT_EQ(r.valid, 2u);
  EXPECT_THROW(score(gen.spec, cases, {Vec(4, 0.0)}, risk::RiskLevel(1.0)), ShapeError);
}

TEST(Metric, OracleIsDeterministicAndThreadIndependent) {
  const auto gen = portfolio(5.0, 5, 4);
  const auto hold = problems::resample(*gen.data.truth, 6, 3);
  const auto sampler = truth_sampler(*gen.data.truth);
  setenv("GENDFL_THREADS", "1", 1);
  const auto a = build_oracle(gen.spec, hold.x, sampler, risk::RiskLevel(0.5), 100, 8);
  setenv("GENDFL_THREADS", "3", 1);
  const auto b = build_oracle(gen.spec, hold.x, sampler, risk::RiskLevel(0.5), 100, 8);
  unsetenv("GENDFL_THREADS");
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].w_star, b[i].w_star);
    EXPECT_EQ(a[i].expected_star, b[i].expected_star);
  }
}

TEST(Threads, EnvironmentCapsWorkers) {
  setenv("GENDFL_THREADS", "2", 1);
  EXPECT_EQ(thread_count(), 2u);
  setenv("GENDFL_THREADS", "junk", 1);
  EXPECT_GE(thread_count(), 1u);
  unsetenv("GENDFL_THREADS");
}

TEST(Threads, ParallelForRethrows) {
  setenv("GENDFL_THREADS", "3", 1);
  std::vector<int> hit(10, 0);
  parallel_for(10, [&](std::size_t i) { hit[i] = 1; });
  EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 10);
  EXPECT_THROW(parallel_for(5, [](std::size_t i) {
                 if (i == 3) throw Error("boom");
               }),
               Error);
  unsetenv("GENDFL_THREADS");
}

TEST(Config, ParsesDefaultsAndModels) {
  const ExperimentConfig cfg = parse_experiment(kTinyConfig);
  EXPECT_EQ(cfg.family, problems::Family::kPortfolio);
  EXPECT_EQ(cfg.gen.d_c, 4u);
  EXPECT_EQ(cfg.eval.seeds.size(), 10u);
  ASSERT_EQ(cfg.models.size(), 2u);
  EXPECT_EQ(cfg.models[1].kind, ModelKind::kPto);
  EXPECT_EQ(cfg.train.solver.restarts, 3);

  const ExperimentConfig sp =
      parse_experiment(R"({"problem": {"family": "shortest_path"}, "models": ["pto"]})");
  EXPECT_EQ(sp.gen.d_c, 0u);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_experiment("{"), ConfigError);
  EXPECT_THROW(parse_experiment(R"({"models": []})"), ConfigError);
  EXPECT_THROW(parse_experiment(R"({"models": ["gendfl"], "train": {"lrr": 1}})"), ConfigError);
  EXPECT_THROW(parse_experiment(R"({"models": ["gendfl"], "eval": {"alpha_eval": [0]}})"),
               ConfigError);
  EXPECT_THROW(parse_experiment(R"({"models": ["gendfl"], "eval": {"m": 50}})"), ConfigError);
  EXPECT_THROW(parse_experiment(R"({"models": ["spo"]})"), ConfigError);
  EXPECT_THROW(parse_experiment(R"({"models": ["pto", "pto"]})"), ConfigError);
  EXPECT_THROW(parse_experiment(R"({"models": ["pto"], "train": {"epochs": "x"}})"), ConfigError);
}

TEST(Experiment, RowAccountingDeterminismAndNonNegativity) {
  const ExperimentConfig cfg = parse_experiment(kTinyConfig);
  const ExperimentResult a = run_experiment(cfg);
  ASSERT_EQ(a.rows.size(), 20u);
  ASSERT_EQ(a.summary.size(), 2u);
  for (const RegretReport& r : a.rows) {
    EXPECT_TRUE(r.error.empty()) << r.error;
    EXPECT_TRUE(std::isfinite(r.regret_pct));
    EXPECT_GE(r.regret_pct, -0.1);
  }
  EXPECT_EQ(a.summary[0].seeds, 10u);

  const ExperimentResult b = run_experiment(cfg);
  EXPECT_EQ(strip_runtime(report_csv_body(a.rows)), strip_runtime(report_csv_body(b.rows)));
}

TEST(Experiment, StageFailuresAreRecordedPerRow) {
  ExperimentConfig cfg = parse_experiment(kTinyConfig);
  cfg.family = problems::Family::kEnergy;
  cfg.energy_csv = tmp_path("does_not_exist.csv");
  cfg.eval.seeds = {0, 1};
  const ExperimentResult r = run_experiment(cfg);
  ASSERT_EQ(r.rows.size(), 4u);
  for (const RegretReport& row : r.rows) {
    EXPECT_FALSE(row.error.empty());
    EXPECT_TRUE(std::isnan(row.regret_pct));
  }
}

TEST(Experiment, EnergyScoresAgainstProxy) {
  ExperimentConfig cfg = parse_experiment(kTinyConfig);
  cfg.family = problems::Family::kEnergy;
  cfg.energy_days = 40;
  cfg.eval.seeds = {0};
  cfg.eval.holdout = 5;
  const ExperimentResult r = run_experiment(cfg);
  ASSERT_EQ(r.rows.size(), 2u);
  for (const RegretReport& row : r.rows) {
    EXPECT_TRUE(row.error.empty()) << row.error;
    EXPECT_GE(row.regret_pct, -0.1);
  }
}

TEST(Report, CsvRoundTripAndStandardErrors) {
  std::vector<RegretReport> rows;
  const double vals[] = {1.0, 2.5, 4.0, 7.0};
  for (int s = 0; s < 4; ++s) {
    RegretReport r;
    r.model = s < 3 ? "gendfl" : "two,stage \"pto\"";
    r.alpha_train = 0.5;
    r.alpha_eval = 0.5;
    r.deg = 2;
    r.sigma = 20;
    r.seed = static_cast<std::uint64_t>(s);
    r.regret_pct = vals[s];
    r.runtime_s = 1.25;
    rows.push_back(r);
  }
  const std::string path = tmp_path("report.csv");
  write_report_csv(path, rows, "generated now");
  const std::string text = slurp(path);
  EXPECT_EQ(text.rfind("# generated now\n", 0), 0u);
  EXPECT_NE(text.find(std::string(kReportHeader) + "\n"), std::string::npos);
  const auto back = read_report_csv(path);
  ASSERT_EQ(back.size(), 4u);
  EXPECT_EQ(back[3].model, "two,stage \"pto\"");
  EXPECT_EQ(back[1].regret_pct, 2.5);

  const auto summary = summarize(back);
  ASSERT_EQ(summary.size(), 2u);
  // mean 2.5, sample sd 1.5, se 1.5 / sqrt(3)
  EXPECT_EQ(summary[0].seeds, 3u);
  EXPECT_NEAR(summary[0].mean_pct, 2.5, 1e-12);
  EXPECT_NEAR(summary[0].se_pct, 1.5 / std::sqrt(3.0), 1e-12);
  EXPECT_EQ(summary[1].se_pct, 0.0);
  fs::remove(path);
}

TEST(Report, RejectsMalformedFiles) {
  const std::string path = tmp_path("bad.csv");
  std::ofstream(path) << "model,family\nx,portfolio\n";
  EXPECT_THROW(read_report_csv(path), SchemaError);
  std::ofstream(path) << "# c\n" << kReportHeader << "\ngendfl,portfolio,2,20,0.5,0.5,0,abc,1\n";
  EXPECT_THROW(read_report_csv(path), SchemaError);
  fs::remove(path);
}

TEST(Sweep, ExpandsGridAndKeepsCellsDistinct) {
  const std::string text = R"({"models": ["gendfl", "pto"],
      "sweep": {"beta": [0, 1, 10], "deg": [1, 2]}})";
  const auto cells = expand_sweep(parse_experiment(text), parse_sweep(text));
  ASSERT_EQ(cells.size(), 6u);
  EXPECT_EQ(cells[0].models[0].name, "gendfl/beta=0");
  EXPECT_EQ(*cells[5].models[0].beta, 10.0);
  EXPECT_EQ(cells[5].gen.deg, 2);
  EXPECT_TRUE(parse_sweep(R"({"models": ["pto"]})").beta.empty());
  EXPECT_THROW(parse_sweep(R"({"sweep": {"gamma": [1]}})"), ConfigError);
  EXPECT_THROW(parse_sweep(R"({"sweep": {"alpha": [1.5]}})"), ConfigError);
}

TEST(Config, ShippedConfigsParseAndExpand) {
  const std::pair<const char*, std::size_t> files[] = {
      {"desk_portfolio.json", 1}, {"beta_sweep.json", 4}, {"alpha_sweep.json", 3}, {"energy.json", 1}};
  for (const auto& [name, cells] : files) {
    const std::string text = slurp(std::string(GENDFL_SOURCE_DIR) + "/configs/" + name);
    ASSERT_FALSE(text.empty()) << name;
    const auto expanded = expand_sweep(parse_experiment(text), parse_sweep(text));
    EXPECT_EQ(expanded.size(), cells) << name;
  }
}

TEST(Theory, SuitePasses) {
  for (const auto& r : theory::run_suite(0)) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
}

TEST(Theory, TranslatedLawsHaveDistanceDelta) {
  const auto r = theory::surrogate_bound_translated({0.1, 0.5, 1.0});
  ASSERT_EQ(r.cases.size(), 6u);
  const double deltas[] = {0.1, 0.1, 0.5, 0.5, 1.0, 1.0};
  for (std::size_t i = 0; i < r.cases.size(); ++i) {
    EXPECT_NEAR(r.cases[i].bound, 2.0 * deltas[i], 1e-12);
    EXPECT_LE(r.cases[i].gap, r.cases[i].bound);
  }
  const auto same = theory::surrogate_bound_translated({0.0});
  for (const auto& c : same.cases) EXPECT_EQ(c.gap, 0.0);
}

TEST(Theory, UniformTopDecile) {
  const auto s = theory::cvar_error_slope(50, 1);
  EXPECT_LT(s.mean_abs_error.back(), 1e-3);
  EXPECT_GE(s.slope, -0.65);
  EXPECT_LE(s.slope, -0.35);
}

}  // namespace
}  // namespace gendfl::eval
