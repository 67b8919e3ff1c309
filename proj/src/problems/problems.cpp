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

#include <cmath>
#include <string>

namespace gendfl::problems {

namespace {

// Sign-preserving integer power.
double ipow(double base, int deg) {
  double r = 1.0;
  for (int i = 0; i < deg; ++i) r *= base;
  return r;
}

Eigen::MatrixXd bernoulli_matrix(std::size_t rows, std::size_t cols,
                                 std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = coin(rng) ? 1 : 0;
  return m;
}

// B x / sqrt(d_x), the affine term shared by every synthetic generator.
Eigen::VectorXd scaled_features(const GroundTruth& t, const double* x,
                                std::size_t n) {
  if (n != static_cast<std::size_t>(t.b.cols())) {
    throw ShapeError("feature vector has " + std::to_string(n) +
                     " entries, generator expects " +
                     std::to_string(t.b.cols()));
  }
  const Eigen::Map<const Eigen::VectorXd> xv(x, t.b.cols());
  return t.b * xv / std::sqrt(static_cast<double>(t.b.cols()));
}

Eigen::VectorXd mean_of(const GroundTruth& t, const double* x, std::size_t n) {
  const Eigen::VectorXd z = scaled_features(t, x, n);
  Eigen::VectorXd m(z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    if (t.family == Family::kShortestPath) {
      m(j) = ipow(z(j) + 3.0, t.deg) / ipow(3.5, t.deg) + 1.0;
    } else {
      m(j) = ipow(0.05 * z(j) + 0.1, t.deg);
    }
  }
  return m;
}

// One draw of c | x written into row `row` of out.
void draw_row(const GroundTruth& t, const double* x, std::size_t n,
              std::mt19937_64& rng, Eigen::MatrixXd& out, Eigen::Index row) {
  const Eigen::VectorXd m = mean_of(t, x, n);
  if (t.family == Family::kShortestPath) {
    std::uniform_real_distribution<double> eps(0.5, 1.5);
    for (Eigen::Index j = 0; j < m.size(); ++j) out(row, j) = m(j) * eps(rng);
    return;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd f(t.l.cols());
  for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = normal(rng);
  const Eigen::VectorXd lf = t.l * f;
  for (Eigen::Index j = 0; j < m.size(); ++j)
    out(row, j) = m(j) + lf(j) + 0.01 * t.sigma * normal(rng);
}

Dataset draw_dataset(const GroundTruth& t, std::size_t n,
                     std::mt19937_64& rng) {
  const Eigen::Index dx = t.b.cols(), dc = t.b.rows();
  Dataset d;
  d.x.resize(static_cast<Eigen::Index>(n), dx);
  d.c.resize(static_cast<Eigen::Index>(n), dc);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(static_cast<std::size_t>(dx));
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < dx; ++j) {
      x[static_cast<std::size_t>(j)] = normal(rng);
      d.x(i, j) = x[static_cast<std::size_t>(j)];
    }
    draw_row(t, x.data(), x.size(), rng, d.c, i);
  }
  d.truth = t;
  return d;
}

GroundTruth factor_truth(Family family, const GenConfig& cfg,
                         std::mt19937_64& rng) {
  GroundTruth t;
  t.family = family;
  t.sigma = cfg.sigma;
  t.deg = cfg.deg;
  t.b = bernoulli_matrix(cfg.d_c, cfg.d_x, rng);
  const double half = 0.0025 * cfg.sigma;
  std::uniform_real_distribution<double> u(-half, half);
  t.l.resize(static_cast<Eigen::Index>(cfg.d_c),
             static_cast<Eigen::Index>(cfg.factor_rank));
  for (Eigen::Index i = 0; i < t.l.rows(); ++i)
    for (Eigen::Index j = 0; j < t.l.cols(); ++j)
      t.l(i, j) = half > 0.0 ? u(rng) : 0.0;
  return t;
}

}  // namespace

std::string family_name(Family f) {
  switch (f) {
    case Family::kPortfolio: return "portfolio";
    case Family::kKnapsack: return "knapsack";
    case Family::kShortestPath: return "shortest_path";
    case Family::kEnergy: return "energy";
  }
  return "?";
}

Family parse_family(const std::string& name) {
  if (name == "portfolio") return Family::kPortfolio;
  if (name == "knapsack") return Family::kKnapsack;
  if (name == "shortest_path" || name == "shortest-path")
    return Family::kShortestPath;
  if (name == "energy") return Family::kEnergy;
  throw ConfigError("unknown problem family '" + name +
                    "' (expected portfolio, knapsack, shortest_path, energy)");
}

bool ProblemSpec::quadratic() const {
  return q.size() > 0 && q.cwiseAbs().maxCoeff() > 0.0;
}

void validate(const GenConfig& cfg) {
  if (cfg.deg != 1 && cfg.deg != 2 && cfg.deg != 4 && cfg.deg != 6 &&
      cfg.deg != 8) {
    throw ConfigError("deg must be one of 1, 2, 4, 6, 8; got " +
                      std::to_string(cfg.deg));
  }
  if (!(cfg.sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
  if (cfg.n < 1) throw ConfigError("n must be >= 1");
  if (cfg.d_x < 1) throw ConfigError("d_x must be >= 1");
  if (cfg.factor_rank < 1) throw ConfigError("factor rank must be >= 1");
}

Generated gen_portfolio(const GenConfig& cfg) {
  validate(cfg);
  if (cfg.d_c < 1) throw ConfigError("d_c must be >= 1");
  std::mt19937_64 rng(cfg.seed);
  const GroundTruth t = factor_truth(Family::kPortfolio, cfg, rng);
  Generated g;
  g.spec.family = Family::kPortfolio;
  g.spec.d_x = cfg.d_x;
  g.spec.d_c = cfg.d_c;
  g.spec.set = solver::capped_simplex(cfg.d_c);
  g.spec.sign = -1.0;
  const double s = 0.01 * cfg.sigma;
  g.spec.q = t.l * t.l.transpose() +
             s * s * Eigen::MatrixXd::Identity(t.l.rows(), t.l.rows());
  g.data = draw_dataset(t, cfg.n, rng);
  return g;
}

Generated gen_knapsack(const GenConfig& cfg) {
  validate(cfg);
  if (cfg.d_c < 1) throw ConfigError("d_c must be >= 1");
  std::mt19937_64 rng(cfg.seed);
  const GroundTruth t = factor_truth(Family::kKnapsack, cfg, rng);
  std::uniform_real_distribution<double> wd(0.1, 1.0);
  Vec weights(cfg.d_c);
  double total = 0.0;
  for (double& p : weights) {
    p = wd(rng);
    total += p;
  }
  Generated g;
  g.spec.family = Family::kKnapsack;
  g.spec.d_x = cfg.d_x;
  g.spec.d_c = cfg.d_c;
  g.spec.set = solver::weighted_capacity(std::move(weights), 0.5 * total);
  g.spec.sign = -1.0;
  g.data = draw_dataset(t, cfg.n, rng);
  return g;
}

Generated gen_shortest_path(const GenConfig& cfg) {
  validate(cfg);
  if (cfg.grid < 2) throw ConfigError("grid size must be >= 2");
  const solver::FeasibleSet set = solver::grid_flow(cfg.grid, cfg.grid);
  const std::size_t arcs = solver::dimension(set);
  if (cfg.d_c != 0 && cfg.d_c != arcs) {
    throw ConfigError("shortest path on a " + std::to_string(cfg.grid) + "x" +
                      std::to_string(cfg.grid) + " grid needs d_c = " +
                      std::to_string(arcs) + " (or 0), got " +
                      std::to_string(cfg.d_c));
  }
  std::mt19937_64 rng(cfg.seed);
  GroundTruth t;
  t.family = Family::kShortestPath;
  t.sigma = cfg.sigma;
  t.deg = cfg.deg;
  t.b = bernoulli_matrix(arcs, cfg.d_x, rng);
  Generated g;
  g.spec.family = Family::kShortestPath;
  g.spec.d_x = cfg.d_x;
  g.spec.d_c = arcs;
  g.spec.set = set;
  g.spec.sign = 1.0;
  g.data = draw_dataset(t, cfg.n, rng);
  return g;
}

Generated generate(Family family, const GenConfig& cfg) {
  switch (family) {
    case Family::kPortfolio: return gen_portfolio(cfg);
    case Family::kKnapsack: return gen_knapsack(cfg);
    case Family::kShortestPath: return gen_shortest_path(cfg);
    case Family::kEnergy: {
      const auto days = synthetic_energy_prices(cfg.n + 1, cfg.seed);
      return energy_instances(days);
    }
  }
  throw ConfigError("unknown family");
}

Vec conditional_mean(const GroundTruth& truth, const Vec& x) {
  const Eigen::VectorXd m = mean_of(truth, x.data(), x.size());
  return Vec(m.data(), m.data() + m.size());
}

Eigen::MatrixXd sample_conditional(const GroundTruth& truth, const Vec& x,
                                   std::size_t m, std::mt19937_64& rng) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(m), truth.b.rows());
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    draw_row(truth, x.data(), x.size(), rng, out, i);
  return out;
}

Dataset resample(const GroundTruth& truth, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return draw_dataset(truth, n, rng);
}

double objective(const ProblemSpec& spec, const Vec& c, const Vec& w) {
  if (c.size() != spec.d_c || w.size() != spec.d_c) {
    throw ShapeError("objective: expected vectors of length " +
                     std::to_string(spec.d_c) + ", got c " +
                     std::to_string(c.size()) + " and w " +
                     std::to_string(w.size()));
  }
  double v = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) v += c[i] * w[i];
  v *= spec.sign;
  if (spec.quadratic()) {
    const Eigen::Map<const Eigen::VectorXd> wv(w.data(), spec.q.rows());
    v += wv.dot(spec.q * wv);
  }
  return v;
}

Vec losses(const ProblemSpec& spec, const Eigen::MatrixXd& samples,
           const Vec& w) {
  if (static_cast<std::size_t>(samples.cols()) != spec.d_c ||
      w.size() != spec.d_c) {
    throw ShapeError("losses: sample or decision dimension mismatch");
  }
  const Eigen::Map<const Eigen::VectorXd> wv(w.data(), samples.cols());
  double quad = 0.0;
  if (spec.quadratic()) quad = wv.dot(spec.q * wv);
  const Eigen::VectorXd l = spec.sign * (samples * wv);
  Vec out(static_cast<std::size_t>(l.size()));
  for (Eigen::Index i = 0; i < l.size(); ++i) out[i] = l(i) + quad;
  return out;
}

ndgrad::Var losses(const ProblemSpec& spec, ndgrad::Var samples,
                   ndgrad::Var w) {
  ndgrad::Var lin = ndgrad::matmul(samples, w) * spec.sign;
  if (!spec.quadratic()) return lin;
  std::vector<double> qd(spec.q.size());
  for (Eigen::Index i = 0; i < spec.q.rows(); ++i)
    for (Eigen::Index j = 0; j < spec.q.cols(); ++j)
      qd[static_cast<std::size_t>(i * spec.q.cols() + j)] = spec.q(i, j);
  ndgrad::Var q = w.graph->constant(ndgrad::Tensor::matrix(
      spec.q.rows(), spec.q.cols(), std::move(qd)));
  return lin + ndgrad::matmul(w, ndgrad::matmul(q, w));
}

}  // namespace gendfl::problems
