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

#include "gendfl/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <string>

namespace gendfl::solver {

using problems::ProblemSpec;
using risk::RiskLevel;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double sigmoid(double u) {
  if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

double sup_dist(const Vec& a, const Vec& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

double spectral_norm(const Eigen::MatrixXd& q) {
  if (q.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

void check_samples(const ProblemSpec& spec, Eigen::Index rows,
                   Eigen::Index cols) {
  if (rows < 1) throw SolverError("CVaR solve needs at least one sample");
  if (static_cast<std::size_t>(cols) != spec.d_c) {
    throw ShapeError("samples have " + std::to_string(cols) +
                     " columns, problem has d_c = " + std::to_string(spec.d_c));
  }
}

// Shortest s-t path under arc costs g, returned as an arc indicator.
Vec grid_path(const GridFlowSet& grid, const Vec& g) {
  const auto arcs = grid_arcs(grid);
  const std::size_t nodes = grid.rows * grid.cols;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(nodes, inf);
  std::vector<std::size_t> via(nodes, arcs.size());
  dist[0] = 0.0;
  const bool nonnegative =
      std::all_of(g.begin(), g.end(), [](double v) { return v >= 0.0; });
  if (nonnegative) {
    std::vector<std::vector<std::size_t>> out(nodes);
    for (std::size_t j = 0; j < arcs.size(); ++j) out[arcs[j].from].push_back(j);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    pq.push({0.0, 0});
    while (!pq.empty()) {
      const auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[u]) continue;
      for (std::size_t j : out[u]) {
        const std::size_t v = arcs[j].to;
        if (dist[u] + g[j] < dist[v]) {
          dist[v] = dist[u] + g[j];
          via[v] = j;
          pq.push({dist[v], v});
        }
      }
    }
  } else {
    // Arcs only point east or south, so node index order is topological.
    std::vector<std::vector<std::size_t>> in(nodes);
    for (std::size_t j = 0; j < arcs.size(); ++j) in[arcs[j].to].push_back(j);
    for (std::size_t v = 1; v < nodes; ++v)
      for (std::size_t j : in[v])
        if (dist[arcs[j].from] + g[j] < dist[v]) {
          dist[v] = dist[arcs[j].from] + g[j];
          via[v] = j;
        }
  }
  Vec w(arcs.size(), 0.0);
  for (std::size_t v = nodes - 1; v != 0; v = arcs[via[v]].from) w[via[v]] = 1.0;
  return w;
}

// argmin g^T w for linear costs g.
Vec linear_argmin(const FeasibleSet& set, const Vec& g) {
  return std::visit(
      Overloaded{
          [&](const CapacitySet& s) {
            Vec w(g.size(), 0.0);
            std::vector<std::size_t> idx;
            for (std::size_t i = 0; i < g.size(); ++i)
              if (g[i] < 0.0) idx.push_back(i);
            std::stable_sort(idx.begin(), idx.end(),
                             [&](std::size_t a, std::size_t b) {
                               return -g[a] / s.weights[a] >
                                      -g[b] / s.weights[b];
                             });
            double room = s.capacity;
            for (std::size_t i : idx) {
              if (room <= 0.0) break;
              w[i] = std::min(1.0, room / s.weights[i]);
              room -= w[i] * s.weights[i];
            }
            return w;
          },
          [&](const GridFlowSet& grid) { return grid_path(grid, g); },
          [&](const ScheduleSet& s) {
            Vec w = s.lower;
            double room =
                s.total - std::accumulate(s.lower.begin(), s.lower.end(), 0.0);
            std::vector<std::size_t> idx(g.size());
            std::iota(idx.begin(), idx.end(), 0);
            std::stable_sort(idx.begin(), idx.end(),
                             [&](std::size_t a, std::size_t b) {
                               return g[a] < g[b];
                             });
            for (std::size_t i : idx) {
              if (room <= 0.0) break;
              const double add = std::min(s.upper[i] - s.lower[i], room);
              w[i] += add;
              room -= add;
            }
            return w;
          }},
      set);
}

// Smoothed, eta-eliminated RU objective for fixed samples and temperature.
class SmoothedCvar {
 public:
  SmoothedCvar(const ProblemSpec& spec, const Eigen::MatrixXd& c,
               RiskLevel alpha, double tau)
      : spec_(spec), c_(c), alpha_(alpha), tau_(tau) {}

  // Value at w; fills grad when non-null.
  double eval(const Vec& w, Vec* grad) {
    const Vec l = problems::losses(spec_, c_, w);
    eta_ = risk::smoothed_optimal_eta(l, alpha_, tau_, eta_);
    const double k = static_cast<double>(l.size());
    const double scale = 1.0 / (alpha_.value() * k);
    double hinge = 0.0;
    Eigen::VectorXd s(static_cast<Eigen::Index>(l.size()));
    for (std::size_t i = 0; i < l.size(); ++i) {
      const double u = (l[i] - eta_) / tau_;
      hinge += u > 0 ? tau_ * (u + std::log1p(std::exp(-u)))
                     : tau_ * std::log1p(std::exp(u));
      s(static_cast<Eigen::Index>(i)) = sigmoid(u);
    }
    if (grad) {
      const Eigen::VectorXd gw = spec_.sign * scale * (c_.transpose() * s);
      grad->assign(gw.data(), gw.data() + gw.size());
      if (spec_.quadratic()) {
        const Eigen::Map<const Eigen::VectorXd> wv(w.data(), c_.cols());
        // sum(s) = alpha K, so the quadratic term's gradient is 2 Q w.
        const Eigen::VectorXd qw = 2.0 * (spec_.q * wv);
        for (std::size_t i = 0; i < grad->size(); ++i) (*grad)[i] += qw(i);
      }
    }
    return eta_ + scale * hinge;
  }

 private:
  const ProblemSpec& spec_;
  const Eigen::MatrixXd& c_;
  RiskLevel alpha_;
  double tau_;
  double eta_ = std::numeric_limits<double>::quiet_NaN();
};

struct PgResult {
  Vec w;
  int iterations = 0;
  bool converged = false;
};

// FISTA with backtracking and function-value restart.
template <class Fn>
PgResult accelerated_pg(Fn&& f, const FeasibleSet& set, Vec w, double lip,
                        int max_iter, double tol) {
  PgResult r;
  Vec y = w, grad(w.size()), trial(w.size());
  double t = 1.0;
  double fw = f(w, nullptr);
  lip = std::max(lip, 1e-12);
  for (int it = 0; it < max_iter; ++it) {
    r.iterations = it + 1;
    const double fy = f(y, &grad);
    Vec next;
    double fn = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t i = 0; i < y.size(); ++i)
        trial[i] = y[i] - grad[i] / lip;
      next = project(trial, set);
      fn = f(next, nullptr);
      double lin = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = next[i] - y[i];
        lin += grad[i] * d;
        sq += d * d;
      }
      if (fn <= fy + lin + 0.5 * lip * sq + 1e-14 * std::abs(fy)) break;
      lip *= 2.0;
    }
    const double step = sup_dist(next, w);
    if (fn > fw) {
      // Momentum overshoot: restart from the current point.
      t = 1.0;
      y = w;
      if (step < tol) {
        r.converged = true;
        break;
      }
      continue;
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] = next[i] + (t - 1.0) / tn * (next[i] - w[i]);
    t = tn;
    w = std::move(next);
    fw = fn;
    lip *= 0.9;
    if (step < tol) {
      r.converged = true;
      break;
    }
  }
  r.w = std::move(w);
  return r;
}

double exact_cvar(const ProblemSpec& spec, const Eigen::MatrixXd& c,
                  const Vec& w, RiskLevel alpha, double* var) {
  const Vec l = problems::losses(spec, c, w);
  if (var) *var = risk::empirical_var(l, alpha);
  return risk::empirical_cvar(l, alpha);
}

void require_finite(const Decision& d) {
  if (!std::isfinite(d.objective)) {
    throw SolverError("non-finite objective in solve");
  }
  for (double v : d.w)
    if (!std::isfinite(v)) throw SolverError("non-finite decision in solve");
}

}  // namespace

void validate(const SolverConfig& cfg) {
  if (cfg.max_iter < 1 || cfg.restarts < 1 || cfg.unroll_steps < 0)
    throw ConfigError("solver iteration counts must be positive");
  if (!(cfg.tau_scale > 0.0) || !(cfg.tau_decay > 0.0 && cfg.tau_decay <= 1.0))
    throw ConfigError("solver smoothing schedule must be positive");
  if (!(cfg.tol > 0.0)) throw ConfigError("solver tolerance must be > 0");
}

Decision solve_pointwise(const ProblemSpec& spec, const Vec& c_hat,
                         const SolverConfig& cfg) {
  validate(cfg);
  if (c_hat.size() != spec.d_c) {
    throw ShapeError("point estimate has " + std::to_string(c_hat.size()) +
                     " entries, problem has d_c = " + std::to_string(spec.d_c));
  }
  Vec g(c_hat.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = spec.sign * c_hat[i];
  Decision d;
  if (!spec.quadratic()) {
    d.w = linear_argmin(spec.set, g);
    d.iterations = 1;
    d.converged = true;
  } else {
    const Eigen::Index n = static_cast<Eigen::Index>(g.size());
    auto f = [&](const Vec& w, Vec* grad) {
      const Eigen::Map<const Eigen::VectorXd> wv(w.data(), n);
      const Eigen::VectorXd qw = spec.q * wv;
      double v = wv.dot(qw);
      for (Eigen::Index i = 0; i < n; ++i) v += g[i] * w[i];
      if (grad)
        for (Eigen::Index i = 0; i < n; ++i) (*grad)[i] = g[i] + 2.0 * qw(i);
      return v;
    };
    const PgResult r =
        accelerated_pg(f, spec.set, initial_point(spec.set),
                       2.0 * spectral_norm(spec.q),
                       cfg.max_iter * cfg.restarts, cfg.tol);
    d.w = r.w;
    d.iterations = r.iterations;
    d.converged = r.converged;
  }
  d.objective = problems::objective(spec, c_hat, d.w);
  d.eta = d.objective;
  require_finite(d);
  return d;
}

Decision solve_cvar_saa(const ProblemSpec& spec, const Eigen::MatrixXd& samples,
                        RiskLevel alpha, const SolverConfig& cfg) {
  validate(cfg);
  check_samples(spec, samples.rows(), samples.cols());
  if (alpha.value() == 1.0 || samples.rows() == 1) {
    // The objective is affine in c, so the mean-sample problem is exact.
    const Eigen::VectorXd mean = samples.colwise().mean();
    Decision d = solve_pointwise(spec, Vec(mean.data(), mean.data() + mean.size()),
                                 cfg);
    d.objective = exact_cvar(spec, samples, d.w, alpha, &d.eta);
    require_finite(d);
    return d;
  }

  Vec w = initial_point(spec.set);
  const Vec l0 = problems::losses(spec, samples, w);
  double tau = std::max(risk::default_tau(l0) * cfg.tau_scale / 0.05, 1e-12);

  Decision best;
  best.w = w;
  best.objective = exact_cvar(spec, samples, w, alpha, &best.eta);
  const double qnorm = 2.0 * spectral_norm(spec.q);
  double row_sq = 0.0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i)
    row_sq = std::max(row_sq, samples.row(i).squaredNorm());

  for (int r = 0; r < cfg.restarts; ++r) {
    SmoothedCvar obj(spec, samples, alpha, tau);
    auto f = [&](const Vec& v, Vec* grad) { return obj.eval(v, grad); };
    // Curvature bound of one smoothed hinge; backtracking tightens it.
    const double lip = qnorm + row_sq / (4.0 * tau * alpha.value() *
                                         static_cast<double>(samples.rows()));
    const PgResult pg =
        accelerated_pg(f, spec.set, w, lip, cfg.max_iter, cfg.tol);
    w = pg.w;
    best.iterations += pg.iterations;
    double var = 0.0;
    const double val = exact_cvar(spec, samples, w, alpha, &var);
    if (val < best.objective) {
      best.w = w;
      best.objective = val;
      best.eta = var;
    }
    best.converged = pg.converged;
    best.tau = tau;
    // Near a kink the loss spread collapses faster than the schedule, so the
    // temperature also tracks the spread at the current iterate.
    const double spread = risk::default_tau(problems::losses(spec, samples, w)) *
                          cfg.tau_scale / 0.05;
    tau = std::max(std::min(tau * cfg.tau_decay, spread), 1e-12);
  }
  require_finite(best);
  return best;
}

UnrolledDecision solve_cvar_saa_unrolled(const ProblemSpec& spec,
                                         ndgrad::Var samples, RiskLevel alpha,
                                         const SolverConfig& cfg) {
  const ndgrad::Tensor& ct = samples.value();
  if (ct.rank() != 2) throw ShapeError("unrolled solve needs a [K, d_c] matrix");
  check_samples(spec, static_cast<Eigen::Index>(ct.rows()),
                static_cast<Eigen::Index>(ct.cols()));
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>
      cmap(ct.data().data(), static_cast<Eigen::Index>(ct.rows()),
           static_cast<Eigen::Index>(ct.cols()));
  const Eigen::MatrixXd c = cmap;

  UnrolledDecision out;
  out.decision = solve_cvar_saa(spec, c, alpha, cfg);
  ndgrad::Graph& graph = *samples.graph;
  ndgrad::Var w = graph.constant(ndgrad::Tensor::vector(out.decision.w));

  const double k = static_cast<double>(c.rows());
  const double tau = out.decision.tau > 0.0
                         ? out.decision.tau
                         : std::max(risk::default_tau(problems::losses(
                                        spec, c, out.decision.w)),
                                    1e-12);

  // Fixed step 1/L from the curvature at the starting point.
  const Vec l0 = problems::losses(spec, c, out.decision.w);
  const double eta0 = risk::smoothed_optimal_eta(l0, alpha, tau);
  Eigen::VectorXd dk(c.rows());
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    const double s = sigmoid((l0[static_cast<std::size_t>(i)] - eta0) / tau);
    dk(i) = s * (1.0 - s);
  }
  double curv = 0.0;
  const double dsum = dk.sum();
  if (dsum > 0.0) {
    const Eigen::RowVectorXd gbar = (dk.transpose() * c) / dsum;
    for (Eigen::Index i = 0; i < c.rows(); ++i)
      curv += dk(i) * (c.row(i) - gbar).squaredNorm();
    curv /= alpha.value() * k * tau;
  }
  const double lip = 2.0 * spectral_norm(spec.q) + curv;
  const double step = lip > 0.0 ? 1.0 / lip : 1.0;

  ndgrad::Var q2;
  if (spec.quadratic()) {
    std::vector<double> qd;
    for (Eigen::Index i = 0; i < spec.q.rows(); ++i)
      for (Eigen::Index j = 0; j < spec.q.cols(); ++j)
        qd.push_back(2.0 * spec.q(i, j));
    q2 = graph.constant(ndgrad::Tensor::matrix(
        static_cast<std::size_t>(spec.q.rows()),
        static_cast<std::size_t>(spec.q.cols()), std::move(qd)));
  }
  for (int t = 0; t < cfg.unroll_steps; ++t) {
    ndgrad::Var l = problems::losses(spec, samples, w);
    ndgrad::Var s = risk::smoothed_tail_weights(l, alpha, tau);
    ndgrad::Var g = ndgrad::matmul(s, samples) * (spec.sign / (alpha.value() * k));
    if (spec.quadratic()) g = g + ndgrad::matmul(q2, w);
    w = project(w - g * step, spec.set);
  }
  out.w = w;
  const ndgrad::Tensor& wt = w.value();
  out.decision.w.assign(wt.data().begin(), wt.data().end());
  out.decision.objective =
      exact_cvar(spec, c, out.decision.w, alpha, &out.decision.eta);
  out.decision.iterations += cfg.unroll_steps;
  require_finite(out.decision);
  return out;
}

}  // namespace gendfl::solver
