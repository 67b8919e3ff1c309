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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gendfl/cli.hpp"

namespace gendfl::cli {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("gendfl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
    std::ofstream(path("cfg.json")) << R"({
      "generator": {"n": 40, "d_x": 3, "d_c": 4, "sigma": 1},
      "train": {"epochs": 1, "k": 8, "m_q": 32, "proxy_epochs": 5, "mlp_epochs": 10,
                "flow_hidden": 8, "solver_restarts": 3, "solver_max_iter": 60,
                "unroll_steps": 3, "batch": 16},
      "eval": {"alpha_eval": [0.5, 1], "m": 100, "holdout": 4, "seeds": [0, 1]},
      "models": ["pto", "gendfl"],
      "sweep": {"beta": [0, 10]}
    })";
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, TheoryExitsZero) {
  const CliRun r = run_cli({"theory"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("PASS surrogate_bound"), std::string::npos);
}

TEST_F(CliTest, EvalWithoutCheckpointIsConfigError) {
  const CliRun r = run_cli({"eval", "--config", path("cfg.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("missing --model-checkpoint"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"theory", "--bogus"}).code, 2);
  const CliRun missing = run_cli({"sweep", "--config", path("nope.json")});
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("nope.json"), std::string::npos);
  std::ofstream(path("bad.json")) << R"({"models": ["pto"], "eval": {"m": 1}})";
  EXPECT_EQ(run_cli({"sweep", "--config", path("bad.json")}).code, 2);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST_F(CliTest, DryRunPrintsGridWithoutRunning) {
  const CliRun r = run_cli({"sweep", "--config", path("cfg.json"), "--dry-run", "--out",
                         path("r.csv")});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("cell 2:"), std::string::npos);
  EXPECT_NE(r.out.find("2 cells, 8 training runs planned"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("r.csv")));
}

TEST_F(CliTest, TrainEvalAndReport) {
  ASSERT_EQ(run_cli({"train", "--config", path("cfg.json"), "--model", "pto", "--out",
                     path("pto.json")})
                .code,
            0);
  const CliRun e = run_cli({"eval", "--config", path("cfg.json"), "--model", "pto",
                         "--model-checkpoint", path("pto.json"), "--out", path("e.csv")});
  ASSERT_EQ(e.code, 0) << e.err;
  const CliRun rep = run_cli({"report", path("e.csv"), "--out", path("s.csv"), "--gnuplot",
                           path("s.dat")});
  ASSERT_EQ(rep.code, 0) << rep.err;
  std::ifstream s(path("s.csv"));
  std::string header;
  std::getline(s, header);
  EXPECT_EQ(header,
            "model,family,deg,sigma,alpha_train,alpha_eval,seeds,mean_regret_pct,se_regret_pct");
  EXPECT_TRUE(fs::exists(path("s.dat")));

  // A checkpoint whose shape does not match the problem is a hard failure.
  std::ofstream(path("other.json")) << R"({"generator": {"d_x": 2, "d_c": 4}, "models": ["pto"]})";
  const CliRun mismatch = run_cli({"eval", "--config", path("other.json"), "--model", "pto",
                                "--model-checkpoint", path("pto.json")});
  EXPECT_EQ(mismatch.code, 1);
  EXPECT_NE(mismatch.err.find("d_x=3"), std::string::npos);
}

TEST_F(CliTest, GenDataWritesDataset) {
  const CliRun r = run_cli({"gen-data", "--family", "knapsack", "--n", "7", "--out",
                         path("k.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(path("k.csv"));
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "instance_id,kind,index,value");
  EXPECT_EQ(run_cli({"gen-data", "--family", "nope", "--out", path("x.csv")}).code, 2);
}

TEST_F(CliTest, SweepWritesReportAndSummary) {
  const CliRun r = run_cli({"sweep", "--config", path("cfg.json"), "--quiet", "--out",
                         path("r.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(path("r.csv"));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') ++rows;
  EXPECT_EQ(rows, 1u + 2 * 2 * 2 * 2);  // header + cells x models x seeds x alpha_eval
  EXPECT_TRUE(fs::exists(path("r_summary.csv")));
}

}  // namespace
}  // namespace gendfl::cli
