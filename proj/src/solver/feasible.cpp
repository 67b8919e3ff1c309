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

#include "gendfl/feasible.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <string>

namespace gendfl::solver {

using ndgrad::CustomOp;
using ndgrad::Tensor;
using ndgrad::Var;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr int kBisectionIters = 200;
constexpr int kNewtonIters = 100;
constexpr double kFlowTol = 1e-13;
constexpr double kFaceTol = 1e-12;

void check_dim(const Vec& v, const FeasibleSet& set) {
  if (v.size() != dimension(set)) {
    throw ShapeError("projection: point has " + std::to_string(v.size()) +
                     " entries, set has dimension " +
                     std::to_string(dimension(set)));
  }
}

// Lagrange multiplier of the capacity constraint at the projection of v.
double capacity_multiplier(const Vec& v, const CapacitySet& s) {
  const std::size_t n = v.size();
  auto load = [&](double lam) {
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      t += s.weights[i] * std::clamp(v[i] - lam * s.weights[i], 0.0, 1.0);
    return t;
  };
  if (load(0.0) <= s.capacity) return 0.0;
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < n; ++i) hi = std::max(hi, v[i] / s.weights[i]);
  for (int it = 0; it < kBisectionIters && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (load(mid) > s.capacity ? lo : hi) = mid;
  }
  double lam = 0.5 * (lo + hi);
  // Exact refinement on the free set found by bisection.
  double num = -s.capacity, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = v[i] - lam * s.weights[i];
    if (u >= 1.0) {
      num += s.weights[i];
    } else if (u > 0.0) {
      num += s.weights[i] * v[i];
      den += s.weights[i] * s.weights[i];
    }
  }
  if (den > 0.0) {
    const double exact = num / den;
    if (exact >= 0.0 &&
        std::abs(load(exact) - s.capacity) <=
            std::abs(load(lam) - s.capacity)) {
      lam = exact;
    }
  }
  return lam;
}

Vec project_capacity(const Vec& v, const CapacitySet& s) {
  const double lam = capacity_multiplier(v, s);
  Vec w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    w[i] = std::clamp(v[i] - lam * s.weights[i], 0.0, 1.0);
  return w;
}

Vec project_schedule(const Vec& v, const ScheduleSet& s) {
  const std::size_t n = v.size();
  auto fill = [&](double lam) {
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      t += std::clamp(v[i] - lam, s.lower[i], s.upper[i]);
    return t;
  };
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    lo = std::min(lo, v[i] - s.upper[i]);
    hi = std::max(hi, v[i] - s.lower[i]);
  }
  for (int it = 0; it < kBisectionIters; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (fill(mid) > s.total ? lo : hi) = mid;
  }
  double lam = 0.5 * (lo + hi);
  double num = -s.total, cnt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = v[i] - lam;
    if (u >= s.upper[i]) {
      num += s.upper[i];
    } else if (u <= s.lower[i]) {
      num += s.lower[i];
    } else {
      num += v[i];
      cnt += 1.0;
    }
  }
  if (cnt > 0.0) {
    const double exact = num / cnt;
    if (std::abs(fill(exact) - s.total) <= std::abs(fill(lam) - s.total)) {
      lam = exact;
    }
  }
  Vec w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = std::clamp(v[i] - lam, s.lower[i], s.upper[i]);
  return w;
}

// Node-arc incidence (out minus in) with the sink row dropped; the dropped
// row is implied by the others.
struct FlowSystem {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::LDLT<Eigen::MatrixXd> aat;
};

FlowSystem flow_system(const GridFlowSet& g) {
  const auto arcs = grid_arcs(g);
  const std::size_t nodes = g.rows * g.cols;
  FlowSystem fs;
  fs.a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nodes - 1),
                               static_cast<Eigen::Index>(arcs.size()));
  for (std::size_t j = 0; j < arcs.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    if (arcs[j].from < nodes - 1) fs.a(arcs[j].from, col) += 1.0;
    if (arcs[j].to < nodes - 1) fs.a(arcs[j].to, col) -= 1.0;
  }
  fs.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nodes - 1));
  fs.b(0) = 1.0;
  fs.aat.compute(fs.a * fs.a.transpose());
  return fs;
}

// Dual semismooth Newton: w(pi) = clip(v + A^T pi, 0, 1) and pi maximises
// the concave dual D(pi) = 0.5 |w - v|^2 - pi^T (A w - b).
Vec project_grid(const Vec& v, const GridFlowSet& g) {
  const FlowSystem fs = flow_system(g);
  const Eigen::Index m = static_cast<Eigen::Index>(v.size());
  const Eigen::Map<const Eigen::VectorXd> vv(v.data(), m);
  auto primal = [&](const Eigen::VectorXd& pi) -> Eigen::VectorXd {
    return (vv + fs.a.transpose() * pi).cwiseMax(0.0).cwiseMin(1.0);
  };
  auto dual = [&](const Eigen::VectorXd& pi, const Eigen::VectorXd& w) {
    return 0.5 * (w - vv).squaredNorm() - pi.dot(fs.a * w - fs.b);
  };
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(fs.a.rows());
  Eigen::VectorXd w = primal(pi);
  Eigen::VectorXd best = w;
  double best_res = (fs.b - fs.a * w).cwiseAbs().maxCoeff();
  for (int it = 0; it < kNewtonIters; ++it) {
    const Eigen::VectorXd r = fs.b - fs.a * w;
    const double res = r.cwiseAbs().maxCoeff();
    if (res < best_res) {
      best_res = res;
      best = w;
    }
    if (res < kFlowTol) break;
    const Eigen::VectorXd u = vv + fs.a.transpose() * pi;
    Eigen::VectorXd free(m);
    for (Eigen::Index j = 0; j < m; ++j)
      free(j) = (u(j) > 0.0 && u(j) < 1.0) ? 1.0 : 0.0;
    Eigen::MatrixXd h = fs.a * free.asDiagonal() * fs.a.transpose();
    h.diagonal().array() += 1e-10;
    const Eigen::VectorXd dir = h.ldlt().solve(r);
    const double d0 = dual(pi, w);
    const double slope = r.dot(dir);
    double t = 1.0;
    Eigen::VectorXd pn = pi + dir, wn = primal(pn);
    while (dual(pn, wn) < d0 + 1e-4 * t * slope && t > 1e-12) {
      t *= 0.5;
      pn = pi + t * dir;
      wn = primal(pn);
    }
    if (t <= 1e-12) break;
    pi = pn;
    w = wn;
  }
  if ((fs.b - fs.a * w).cwiseAbs().maxCoeff() > best_res) w = best;
  // Exact solve on the face found above: bound arcs stay fixed, free arcs
  // take the least-norm correction that restores conservation.
  std::vector<Eigen::Index> free;
  for (Eigen::Index j = 0; j < m; ++j)
    if (w(j) > 0.0 && w(j) < 1.0) free.push_back(j);
  if (!free.empty()) {
    Eigen::MatrixXd af(fs.a.rows(), static_cast<Eigen::Index>(free.size()));
    for (std::size_t j = 0; j < free.size(); ++j)
      af.col(static_cast<Eigen::Index>(j)) = fs.a.col(free[j]);
    const Eigen::VectorXd r = fs.b - fs.a * w;
    const Eigen::VectorXd y =
        (af * af.transpose()).completeOrthogonalDecomposition().solve(r);
    Eigen::VectorXd wp = w;
    const Eigen::VectorXd step = af.transpose() * y;
    for (std::size_t j = 0; j < free.size(); ++j)
      wp(free[j]) += step(static_cast<Eigen::Index>(j));
    const double box = std::max((-wp).maxCoeff(), (wp.array() - 1.0).maxCoeff());
    if (box <= 1e-13 &&
        (fs.b - fs.a * wp).cwiseAbs().maxCoeff() < r.cwiseAbs().maxCoeff()) {
      w = wp.cwiseMax(0.0).cwiseMin(1.0);
    }
  }
  return Vec(w.data(), w.data() + m);
}

}  // namespace

FeasibleSet capped_simplex(std::size_t n) {
  return CapacitySet{Vec(n, 1.0), 1.0};
}

FeasibleSet weighted_capacity(Vec weights, double capacity) {
  FeasibleSet s = CapacitySet{std::move(weights), capacity};
  validate(s);
  return s;
}

FeasibleSet grid_flow(std::size_t rows, std::size_t cols) {
  FeasibleSet s = GridFlowSet{rows, cols};
  validate(s);
  return s;
}

FeasibleSet schedule(Vec lower, Vec upper, double total) {
  FeasibleSet s = ScheduleSet{std::move(lower), std::move(upper), total};
  validate(s);
  return s;
}

std::size_t dimension(const FeasibleSet& set) {
  return std::visit(
      Overloaded{
          [](const CapacitySet& s) { return s.weights.size(); },
          [](const GridFlowSet& g) {
            return g.rows * (g.cols - 1) + (g.rows - 1) * g.cols;
          },
          [](const ScheduleSet& s) { return s.lower.size(); }},
      set);
}

void validate(const FeasibleSet& set) {
  std::visit(
      Overloaded{
          [](const CapacitySet& s) {
            if (s.weights.empty()) throw ConfigError("capacity set is empty");
            if (!(s.capacity > 0.0))
              throw ConfigError("infeasible set: capacity must be > 0");
            for (double p : s.weights)
              if (!(p > 0.0))
                throw ConfigError("infeasible set: weights must be > 0");
          },
          [](const GridFlowSet& g) {
            if (g.rows < 2 || g.cols < 2)
              throw ConfigError("grid must be at least 2 x 2");
          },
          [](const ScheduleSet& s) {
            if (s.lower.empty() || s.lower.size() != s.upper.size())
              throw ConfigError("schedule bounds must be non-empty and equal "
                                "length");
            double lo = 0.0, hi = 0.0;
            for (std::size_t i = 0; i < s.lower.size(); ++i) {
              if (!(s.lower[i] <= s.upper[i]))
                throw ConfigError("infeasible set: lower bound above upper");
              lo += s.lower[i];
              hi += s.upper[i];
            }
            if (s.total < lo - 1e-12 || s.total > hi + 1e-12)
              throw ConfigError("infeasible set: total outside [sum lower, "
                                "sum upper]");
          }},
      set);
}

std::vector<Arc> grid_arcs(const GridFlowSet& g) {
  std::vector<Arc> arcs;
  for (std::size_t r = 0; r < g.rows; ++r)
    for (std::size_t c = 0; c + 1 < g.cols; ++c)
      arcs.push_back({r * g.cols + c, r * g.cols + c + 1});
  for (std::size_t r = 0; r + 1 < g.rows; ++r)
    for (std::size_t c = 0; c < g.cols; ++c)
      arcs.push_back({r * g.cols + c, (r + 1) * g.cols + c});
  return arcs;
}

double max_violation(const Vec& w, const FeasibleSet& set) {
  check_dim(w, set);
  return std::visit(
      Overloaded{
          [&](const CapacitySet& s) {
            double v = 0.0, load = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) {
              v = std::max({v, -w[i], w[i] - 1.0});
              load += s.weights[i] * w[i];
            }
            return std::max(v, load - s.capacity);
          },
          [&](const GridFlowSet& g) {
            double v = 0.0;
            for (double x : w) v = std::max({v, -x, x - 1.0});
            const std::size_t nodes = g.rows * g.cols;
            Vec net(nodes, 0.0);
            const auto arcs = grid_arcs(g);
            for (std::size_t j = 0; j < arcs.size(); ++j) {
              net[arcs[j].from] += w[j];
              net[arcs[j].to] -= w[j];
            }
            net[0] -= 1.0;
            net[nodes - 1] += 1.0;
            for (double r : net) v = std::max(v, std::abs(r));
            return v;
          },
          [&](const ScheduleSet& s) {
            double v = 0.0, total = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) {
              v = std::max({v, s.lower[i] - w[i], w[i] - s.upper[i]});
              total += w[i];
            }
            return std::max(v, std::abs(total - s.total));
          }},
      set);
}

Vec project(const Vec& v, const FeasibleSet& set) {
  check_dim(v, set);
  return std::visit(
      Overloaded{[&](const CapacitySet& s) { return project_capacity(v, s); },
                 [&](const GridFlowSet& g) { return project_grid(v, g); },
                 [&](const ScheduleSet& s) { return project_schedule(v, s); }},
      set);
}

Vec initial_point(const FeasibleSet& set) {
  return std::visit(
      Overloaded{[&](const CapacitySet& s) {
                   return project(Vec(s.weights.size(), 0.5), set);
                 },
                 [&](const GridFlowSet&) {
                   return project(Vec(dimension(set), 0.5), set);
                 },
                 [&](const ScheduleSet& s) {
                   Vec mid(s.lower.size());
                   for (std::size_t i = 0; i < mid.size(); ++i)
                     mid[i] = 0.5 * (s.lower[i] + s.upper[i]);
                   return project(mid, set);
                 }},
      set);
}

namespace {

// Jacobian-vector product of the projection on the face of w.
Vec projection_jvp(const Vec& v, const Vec& w, const Vec& u,
                   const FeasibleSet& set) {
  const std::size_t n = w.size();
  return std::visit(
      Overloaded{
          [&](const CapacitySet& s) {
            Vec out(n, 0.0);
            std::vector<char> free(n, 0);
            double pu = 0.0, pp = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
              free[i] = w[i] > kFaceTol && w[i] < 1.0 - kFaceTol;
              if (free[i]) {
                out[i] = u[i];
                pu += s.weights[i] * u[i];
                pp += s.weights[i] * s.weights[i];
              }
            }
            if (capacity_multiplier(v, s) > 0.0 && pp > 0.0) {
              for (std::size_t i = 0; i < n; ++i)
                if (free[i]) out[i] -= s.weights[i] * pu / pp;
            }
            return out;
          },
          [&](const GridFlowSet& g) {
            const FlowSystem fs = flow_system(g);
            std::vector<Eigen::Index> free;
            for (std::size_t i = 0; i < n; ++i)
              if (w[i] > 1e-9 && w[i] < 1.0 - 1e-9)
                free.push_back(static_cast<Eigen::Index>(i));
            Vec out(n, 0.0);
            if (free.empty()) return out;
            const Eigen::Index f = static_cast<Eigen::Index>(free.size());
            Eigen::MatrixXd af(fs.a.rows(), f);
            Eigen::VectorXd uf(f);
            for (Eigen::Index j = 0; j < f; ++j) {
              af.col(j) = fs.a.col(free[j]);
              uf(j) = u[free[j]];
            }
            const Eigen::MatrixXd at = af.transpose();
            const Eigen::VectorXd y =
                at.completeOrthogonalDecomposition().solve(uf);
            const Eigen::VectorXd r = uf - at * y;
            for (Eigen::Index j = 0; j < f; ++j) out[free[j]] = r(j);
            return out;
          },
          [&](const ScheduleSet& s) {
            Vec out(n, 0.0);
            double su = 0.0, cnt = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
              if (w[i] > s.lower[i] + kFaceTol && w[i] < s.upper[i] - kFaceTol) {
                out[i] = u[i];
                su += u[i];
                cnt += 1.0;
              }
            }
            for (std::size_t i = 0; i < n; ++i)
              if (w[i] > s.lower[i] + kFaceTol && w[i] < s.upper[i] - kFaceTol)
                out[i] -= su / cnt;
            return out;
          }},
      set);
}

}  // namespace

Var project(Var v, const FeasibleSet& set) {
  auto op = std::make_shared<CustomOp>();
  op->name = "project";
  op->forward = [set](std::span<const Tensor* const> in) {
    const Tensor& t = *in[0];
    const Vec w = project(Vec(t.data().begin(), t.data().end()), set);
    return Tensor(t.shape(), w);
  };
  op->backward = [set](std::span<const Tensor* const> in, const Tensor& out,
                       const Tensor& up) {
    const Tensor& t = *in[0];
    const Vec g = projection_jvp(Vec(t.data().begin(), t.data().end()),
                                 Vec(out.data().begin(), out.data().end()),
                                 Vec(up.data().begin(), up.data().end()), set);
    return std::vector<Tensor>{Tensor(t.shape(), g)};
  };
  return ndgrad::custom(op, {v});
}

}  // namespace gendfl::solver
