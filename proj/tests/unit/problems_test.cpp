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

#include "gendfl/problems.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "gendfl/solver.hpp"

namespace gendfl::problems {
namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() /
          ("gendfl_problems_" + name))
      .string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

Vec row(const Eigen::MatrixXd& m, Eigen::Index i) {
  Vec v(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) v[j] = m(i, j);
  return v;
}

TEST(GenPortfolio, ZeroFeaturesGiveBaseTerm) {
  GenConfig cfg;
  cfg.deg = 2;
  const auto g = gen_portfolio(cfg);
  const Vec m = conditional_mean(*g.data.truth, Vec(cfg.d_x, 0.0));
  for (double v : m) EXPECT_DOUBLE_EQ(v, 0.01);
  // With sigma = 0 the loadings vanish: Sigma = 0 and c is deterministic.
  cfg.sigma = 0.0;
  const auto z = gen_portfolio(cfg);
  EXPECT_EQ(z.spec.q.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_FALSE(z.spec.quadratic());
  for (Eigen::Index i = 0; i < z.data.c.rows(); ++i) {
    const Vec mean = conditional_mean(*z.data.truth, row(z.data.x, i));
    for (Eigen::Index j = 0; j < z.data.c.cols(); ++j)
      EXPECT_DOUBLE_EQ(z.data.c(i, j), mean[j]);
  }
}

TEST(GenPortfolio, HyperparameterRowShapes) {
  GenConfig cfg;
  cfg.n = 320;
  cfg.d_x = 50;
  cfg.d_c = 50;
  cfg.sigma = 20.0;
  const auto g = gen_portfolio(cfg);
  EXPECT_EQ(g.data.size(), 320u);
  EXPECT_EQ(g.data.x.cols(), 50);
  EXPECT_EQ(g.data.c.cols(), 50);
  EXPECT_EQ(g.spec.q.rows(), 50);
  // L entries within +-0.0025 sigma, rank 5.
  EXPECT_EQ(g.data.truth->l.cols(), 5);
  EXPECT_LE(g.data.truth->l.cwiseAbs().maxCoeff(), 0.0025 * 20.0);
}

TEST(GenPortfolio, CovarianceReconstruction) {
  GenConfig cfg;
  cfg.sigma = 7.0;
  const auto g = gen_portfolio(cfg);
  const Eigen::MatrixXd& l = g.data.truth->l;
  const Eigen::MatrixXd expect =
      l * l.transpose() + 0.07 * 0.07 * Eigen::MatrixXd::Identity(10, 10);
  EXPECT_LT((g.spec.q - expect).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((g.spec.q - g.spec.q.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.spec.q);
  EXPECT_GE(es.eigenvalues().minCoeff(), 0.0);
}

TEST(GenPortfolio, RejectsBadConfig) {
  GenConfig cfg;
  cfg.deg = 3;
  EXPECT_THROW(gen_portfolio(cfg), ConfigError);
  cfg.deg = 2;
  cfg.sigma = -1;
  EXPECT_THROW(gen_portfolio(cfg), ConfigError);
  cfg.sigma = 1;
  cfg.n = 0;
  EXPECT_THROW(gen_portfolio(cfg), ConfigError);
}

TEST(GenKnapsack, BaseTermAndSeededWeights) {
  GenConfig cfg;
  cfg.deg = 1;
  cfg.seed = 99;
  const auto a = gen_knapsack(cfg);
  for (double v : conditional_mean(*a.data.truth, Vec(cfg.d_x, 0.0)))
    EXPECT_DOUBLE_EQ(v, 0.1);
  const auto b = gen_knapsack(cfg);
  const auto& sa = std::get<solver::CapacitySet>(a.spec.set);
  const auto& sb = std::get<solver::CapacitySet>(b.spec.set);
  EXPECT_EQ(sa.weights, sb.weights);
  EXPECT_EQ(sa.capacity, sb.capacity);
  double total = 0.0;
  for (double p : sa.weights) {
    EXPECT_GE(p, 0.1);
    EXPECT_LE(p, 1.0);
    total += p;
  }
  EXPECT_DOUBLE_EQ(sa.capacity, 0.5 * total);
  cfg.n = 320;
  cfg.d_x = 50;
  cfg.d_c = 50;
  const auto big = gen_knapsack(cfg);
  EXPECT_EQ(big.data.c.cols(), 50);
  EXPECT_EQ(big.data.size(), 320u);
}

TEST(GenShortestPath, BaseCostAndPositivity) {
  GenConfig cfg;
  cfg.deg = 1;
  cfg.d_c = 0;
  cfg.d_x = 25;
  cfg.sigma = 5.0;
  const auto g = gen_shortest_path(cfg);
  EXPECT_EQ(g.spec.d_c, 40u);
  for (double v : conditional_mean(*g.data.truth, Vec(25, 0.0)))
    EXPECT_NEAR(v, 3.0 / 3.5 + 1.0, 1e-12);
  cfg.deg = 2;
  const auto h = gen_shortest_path(cfg);
  std::mt19937_64 rng(1);
  double min_cost = 1e9;
  for (int i = 0; i < 2500; ++i) {
    const Eigen::MatrixXd s = sample_conditional(
        *h.data.truth, row(h.data.x, i % h.data.x.rows()), 40, rng);
    min_cost = std::min(min_cost, s.minCoeff());
  }
  EXPECT_GT(min_cost, 0.0);  // 10^5 arc-cost draws
  cfg.d_c = 12;
  EXPECT_THROW(gen_shortest_path(cfg), ConfigError);
}

TEST(Generators, SameSeedSameData) {
  GenConfig cfg;
  cfg.seed = 5;
  for (Family f : {Family::kPortfolio, Family::kKnapsack}) {
    const auto a = generate(f, cfg), b = generate(f, cfg);
    EXPECT_EQ(a.data.x, b.data.x);
    EXPECT_EQ(a.data.c, b.data.c);
  }
  cfg.seed = 6;
  EXPECT_NE(gen_portfolio(cfg).data.x, generate(Family::kPortfolio, GenConfig{}).data.x);
}

TEST(Generators, ConditionalResamplingMatchesMean) {
  GenConfig cfg;
  cfg.d_c = 8;
  cfg.sigma = 20.0;
  for (Family f : {Family::kPortfolio, Family::kKnapsack, Family::kShortestPath}) {
    GenConfig c = cfg;
    if (f == Family::kShortestPath) c.d_c = 0;
    const auto g = generate(f, c);
    const Vec x = row(g.data.x, 0);
    std::mt19937_64 rng(11);
    const Eigen::MatrixXd s = sample_conditional(*g.data.truth, x, 10000, rng);
    const Vec mean = conditional_mean(*g.data.truth, x);
    int outside = 0;
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      const double m = s.col(j).mean();
      const double sd = std::sqrt((s.col(j).array() - m).square().sum() / 9999.0);
      if (std::abs(m - mean[j]) > 3.0 * sd / 100.0) ++outside;
    }
    // A 3-SE band holds 99.7% of the time per coordinate.
    EXPECT_LE(outside, f == Family::kShortestPath ? 1 : 0) << family_name(f);
  }
}

TEST(Objective, Examples) {
  ProblemSpec p;
  p.family = Family::kPortfolio;
  p.d_c = 2;
  p.set = solver::capped_simplex(2);
  p.sign = -1.0;
  p.q = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_DOUBLE_EQ(objective(p, {0, 0}, {1, 0}), 1.0);
  ProblemSpec k;
  k.family = Family::kKnapsack;
  k.d_c = 2;
  k.set = solver::weighted_capacity({1, 1}, 2.0);
  k.sign = -1.0;
  EXPECT_DOUBLE_EQ(objective(k, {1, 2}, {1, 1}), -3.0);
  const ProblemSpec e = energy_spec();
  const solver::Vec w = solver::initial_point(e.set);
  EXPECT_NEAR(objective(e, Vec(48, 2.0), w), 48.0, 1e-12);
  EXPECT_THROW(objective(k, {1}, {1, 1}), ShapeError);
}

TEST(Objective, LipschitzInCostWithL1Bound) {
  GenConfig cfg;
  const auto g = gen_portfolio(cfg);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    Vec c1(10), c2(10), v(10);
    for (int j = 0; j < 10; ++j) {
      c1[j] = n(rng);
      c2[j] = n(rng);
      v[j] = n(rng);
    }
    const Vec w = solver::project(v, g.spec.set);
    double l1 = 0.0, sup = 0.0;
    for (int j = 0; j < 10; ++j) {
      l1 += std::abs(w[j]);
      sup = std::max(sup, std::abs(c1[j] - c2[j]));
    }
    EXPECT_LE(std::abs(objective(g.spec, c1, w) - objective(g.spec, c2, w)),
              l1 * sup + 1e-12);
    EXPECT_LE(l1, 1.0 + 1e-9);
  }
}

TEST(Objective, GraphLossesMatchPlain) {
  GenConfig cfg;
  cfg.d_c = 4;
  const auto g = gen_portfolio(cfg);
  const Eigen::MatrixXd s = g.data.c.topRows(6);
  const Vec w{0.1, 0.2, 0.3, 0.1};
  ndgrad::Graph gr;
  std::vector<double> d;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 4; ++j) d.push_back(s(i, j));
  auto sv = gr.constant(ndgrad::Tensor::matrix(6, 4, d));
  auto wv = gr.parameter("w", ndgrad::Tensor::vector(w));
  auto l = losses(g.spec, sv, wv);
  const Vec plain = losses(g.spec, s, w);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(l.value()[i], plain[i], 1e-15);
  ndgrad::sum(l);
  EXPECT_LT(ndgrad::finite_diff_check(gr, {}, 1e-6), 1e-8);
}

TEST(Energy, SyntheticRoundTripIsBitExact) {
  const auto days = synthetic_energy_prices(5, 3);
  const std::string path = temp_path("energy.csv");
  write_energy_csv(path, days);
  const auto back = read_energy_prices(path);
  ASSERT_EQ(back.size(), days.size());
  for (std::size_t d = 0; d < days.size(); ++d)
    for (std::size_t s = 0; s < 48; ++s) EXPECT_EQ(back[d][s], days[d][s]);
  for (const auto& day : days)
    for (double p : day) EXPECT_GT(p, 0.0);
  std::remove(path.c_str());
}

TEST(Energy, TwoDaysGiveOnePair) {
  const auto days = synthetic_energy_prices(2, 9);
  const std::string path = temp_path("two.csv");
  write_energy_csv(path, days);
  const auto g = load_energy_csv(path);
  EXPECT_EQ(g.data.size(), 1u);
  EXPECT_EQ(g.data.x(0, 5), days[0][5]);
  EXPECT_EQ(g.data.c(0, 5), days[1][5]);
  EXPECT_FALSE(g.data.truth.has_value());
  std::remove(path.c_str());
}

TEST(Energy, ConstantPriceDayHasNoRegret) {
  const ProblemSpec e = energy_spec();
  const Vec c(48, 3.0);
  const solver::Decision best = solver::solve_pointwise(e, c);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 2);
  for (int t = 0; t < 20; ++t) {
    Vec v(48);
    for (double& x : v) x = u(rng);
    const Vec w = solver::project(v, e.set);
    EXPECT_NEAR(objective(e, c, w), best.objective, 1e-9);
  }
}

TEST(Energy, SchemaErrors) {
  const std::string path = temp_path("bad.csv");
  auto day_rows = [](int day, int from, int to) {
    std::string s;
    for (int k = from; k <= to; ++k)
      s += std::to_string(day) + "," + std::to_string(k) + ",1.5\n";
    return s;
  };
  write_text(path, "day,slot,price\n" + day_rows(0, 1, 48));
  EXPECT_THROW(read_energy_prices(path), SchemaError);
  write_text(path, "day_id,slot,price\n" + day_rows(0, 1, 48) + "1,1,abc\n");
  EXPECT_THROW(read_energy_prices(path), SchemaError);
  write_text(path, "day_id,slot,price\n" + day_rows(0, 1, 48) + day_rows(2, 1, 48));
  EXPECT_THROW(read_energy_prices(path), SchemaError);  // missing day 1
  write_text(path, "day_id,slot,price\n" + day_rows(0, 1, 10) + day_rows(0, 9, 48));
  EXPECT_THROW(read_energy_prices(path), SchemaError);  // slots go backwards
  write_text(path, "day_id,slot,price\n" + day_rows(0, 1, 30));
  EXPECT_THROW(read_energy_prices(path), SchemaError);  // short day
  write_text(path, "day_id,slot,price\n" + day_rows(0, 1, 48) + day_rows(1, 1, 48));
  EXPECT_EQ(read_energy_prices(path).size(), 2u);
  EXPECT_THROW(read_energy_prices(temp_path("does_not_exist.csv")), Error);
  std::remove(path.c_str());
}

TEST(DatasetCsv, RoundTripIsBitExact) {
  GenConfig cfg;
  cfg.n = 7;
  const auto g = gen_portfolio(cfg);
  const std::string path = temp_path("data.csv");
  write_dataset_csv(path, g.data);
  const Dataset back = read_dataset_csv(path);
  EXPECT_EQ(back.x, g.data.x);
  EXPECT_EQ(back.c, g.data.c);
  write_text(path, "instance_id,kind,index,value\n0,z,0,1\n");
  EXPECT_THROW(read_dataset_csv(path), SchemaError);
  std::remove(path.c_str());
}

TEST(Family, NamesRoundTrip) {
  for (Family f : {Family::kPortfolio, Family::kKnapsack, Family::kShortestPath,
                   Family::kEnergy})
    EXPECT_EQ(parse_family(family_name(f)), f);
  EXPECT_THROW(parse_family("lottery"), ConfigError);
}

}  // namespace
}  // namespace gendfl::problems
