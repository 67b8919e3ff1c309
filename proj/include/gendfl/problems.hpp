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

// Problem families, synthetic generators and CSV I/O.
//
// Every family's objective has the form
//     f(c, w) = sign * c^T w + w^T Q w
// with sign = -1 for the profit-style families (portfolio, knapsack) and
// sign = +1 for the cost-style ones (shortest path, energy). Q is the
// portfolio covariance and zero elsewhere.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gendfl/feasible.hpp"
#include "gendfl/ndgrad.hpp"

namespace gendfl::problems {

using solver::Vec;

enum class Family { kPortfolio, kKnapsack, kShortestPath, kEnergy };

std::string family_name(Family f);
Family parse_family(const std::string& name);  // throws ConfigError

struct ProblemSpec {
  Family family = Family::kPortfolio;
  std::size_t d_x = 0;
  std::size_t d_c = 0;
  solver::FeasibleSet set;
  double sign = -1.0;
  Eigen::MatrixXd q;  // d_c x d_c; zero for linear families
  bool quadratic() const;
};

struct GenConfig {
  std::size_t n = 320;
  std::size_t d_x = 5;
  std::size_t d_c = 10;
  int deg = 2;
  double sigma = 20.0;
  std::size_t factor_rank = 5;
  std::size_t grid = 5;  // shortest path only
  std::uint64_t seed = 0;
};

// Everything needed to draw fresh c | x for a synthetic family.
struct GroundTruth {
  Family family = Family::kPortfolio;
  Eigen::MatrixXd b;  // d_c x d_x, Bernoulli(0.5)
  Eigen::MatrixXd l;  // d_c x k factor loadings (empty for shortest path)
  double sigma = 0.0;
  int deg = 1;
};

struct Dataset {
  Eigen::MatrixXd x;  // n x d_x
  Eigen::MatrixXd c;  // n x d_c
  std::optional<GroundTruth> truth;
  std::size_t size() const { return static_cast<std::size_t>(x.rows()); }
};

struct Generated {
  Dataset data;
  ProblemSpec spec;
};

// Throws ConfigError on invalid deg, sigma, n or grid.
void validate(const GenConfig& cfg);

Generated gen_portfolio(const GenConfig& cfg);
Generated gen_knapsack(const GenConfig& cfg);
Generated gen_shortest_path(const GenConfig& cfg);
Generated generate(Family family, const GenConfig& cfg);

// E[c | x] under the generator.
Vec conditional_mean(const GroundTruth& truth, const Vec& x);

// m fresh draws of c | x as an m x d_c matrix.
Eigen::MatrixXd sample_conditional(const GroundTruth& truth, const Vec& x,
                                   std::size_t m, std::mt19937_64& rng);

// n fresh (x, c) pairs from the same generator (new x, new noise).
Dataset resample(const GroundTruth& truth, std::size_t n, std::uint64_t seed);

double objective(const ProblemSpec& spec, const Vec& c, const Vec& w);

// Losses f(c_k, w) for every row of a K x d_c sample matrix.
Vec losses(const ProblemSpec& spec, const Eigen::MatrixXd& samples,
           const Vec& w);

// Graph form: samples [K, d_c] and w [d_c] give a [K] loss vector.
ndgrad::Var losses(const ProblemSpec& spec, ndgrad::Var samples,
                   ndgrad::Var w);

// Energy scheduling. CSV header `day_id,slot,price`, slots 1..48 per day,
// rows sorted by (day_id, slot), consecutive day ids.
inline constexpr std::size_t kSlotsPerDay = 48;
using DayPrices = std::vector<double>;

std::vector<DayPrices> read_energy_prices(const std::string& path);
void write_energy_csv(const std::string& path,
                      const std::vector<DayPrices>& days);
// Instance i pairs day i (features) with day i + 1 (prices to schedule).
Generated energy_instances(const std::vector<DayPrices>& days);
Generated load_energy_csv(const std::string& path);
ProblemSpec energy_spec();

// Daily sinusoid plus Gaussian noise; prices stay positive.
std::vector<DayPrices> synthetic_energy_prices(std::size_t days,
                                               std::uint64_t seed);

// Dataset CSV `instance_id,kind,index,value` with kind in {x, c}.
void write_dataset_csv(const std::string& path, const Dataset& data);
Dataset read_dataset_csv(const std::string& path);

}  // namespace gendfl::problems
