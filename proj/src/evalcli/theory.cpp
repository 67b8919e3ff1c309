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

#include "gendfl/theory.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include "gendfl/risk.hpp"

namespace gendfl::theory {

namespace {

using Vec = std::vector<double>;

std::string fmt(const char* spec, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, spec, a, b, c);
  return buf;
}

CheckResult timed(const std::string& name, const std::function<void(CheckResult&)>& body) {
  CheckResult r;
  r.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  body(r);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

// Mean of the smallest alpha share of the sample, the lower-tail analogue of
// empirical_cvar.
double lower_tail_mean(const Vec& c, double alpha) {
  Vec neg(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) neg[i] = -c[i];
  return -risk::empirical_cvar(neg, risk::RiskLevel(alpha));
}

// One-dimensional regret CVaR_alpha[f(c, w_hat) - f(c, w*)] with
// f = -c w + w^2 / 2.
double regret_1d(const Vec& c, double w_hat, double w_star, double alpha) {
  Vec gap(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    gap[i] = -c[i] * w_hat + 0.5 * w_hat * w_hat + c[i] * w_star - 0.5 * w_star * w_star;
  }
  return risk::empirical_cvar(gap, risk::RiskLevel(alpha));
}

struct GaussianLaw {
  double a = 0.0, b = 0.0, s = 1.0;  // c | x ~ N(a + b x, s^2)
};

constexpr std::size_t kGridX = 16;
constexpr std::size_t kDraws = 2000;

// Common random numbers: both laws push the same standard normals forward.
BoundCase bound_case(const GaussianLaw& p, const GaussianLaw& q, double theta0, double theta1,
                     double alpha, const Vec& z) {
  double lp = 0.0, lq = 0.0, w1 = 0.0;
  for (std::size_t g = 0; g < kGridX; ++g) {
    const double x = -1.0 + 2.0 * static_cast<double>(g) / static_cast<double>(kGridX - 1);
    Vec cp(z.size()), cq(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      cp[i] = p.a + p.b * x + p.s * z[i];
      cq[i] = q.a + q.b * x + q.s * z[i];
    }
    // argmin over [0, 1] of w^2 / 2 - w * lower_tail_mean(c).
    const double w_star = std::clamp(lower_tail_mean(cp, alpha), 0.0, 1.0);
    const double w_hat = std::clamp(theta0 + theta1 * x, 0.0, 1.0);
    lp += regret_1d(cp, w_hat, w_star, alpha);
    lq += regret_1d(cq, w_hat, w_star, alpha);
    w1 += risk::wasserstein1_1d(cp, cq);
  }
  const double n = static_cast<double>(kGridX);
  constexpr double kLf = 1.0;
  return {std::abs(lp - lq) / n, 2.0 * kLf * w1 / n, alpha};
}

void tally(BoundResult& r) {
  for (const BoundCase& c : r.cases) {
    if (c.gap > c.bound + 1e-12) ++r.violations;
    if (c.bound > 0.0) r.max_ratio = std::max(r.max_ratio, c.gap / c.bound);
  }
}

Vec normals(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vec z(n);
  for (double& v : z) v = nd(rng);
  return z;
}

}  // namespace

CheckResult ru_identity(std::size_t trials, std::uint64_t seed) {
  return timed("ru_identity", [&](CheckResult& r) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> ksize(10, 200);
    std::normal_distribution<double> nd(0.0, 1.0);
    double worst = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t k = ksize(rng);
      const std::size_t m = std::uniform_int_distribution<std::size_t>(1, k)(rng);
      const double alpha = static_cast<double>(m) / static_cast<double>(k);
      Vec l(k);
      const double scale = std::exp(2.0 * nd(rng));
      for (double& v : l) v = scale * nd(rng);
      const double ru = risk::cvar_ru(l, risk::RiskLevel(alpha)).value;
      const double direct = risk::empirical_cvar(l, risk::RiskLevel(alpha));
      worst = std::max(worst, std::abs(ru - direct) / std::max(1.0, std::abs(direct)));
    }
    r.passed = worst < 1e-9;
    r.detail = fmt("max |cvar_ru - empirical_cvar| = %.3g over %g trials", worst,
                   static_cast<double>(trials));
  });
}

SlopeResult cvar_error_slope(std::size_t replicates, std::uint64_t seed) {
  SlopeResult s;
  s.n = {1e2, 1e3, 1e4, 1e5};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const risk::RiskLevel alpha(0.1);
  for (double nd : s.n) {
    const auto n = static_cast<std::size_t>(nd);
    Vec l(n);
    double err = 0.0;
    for (std::size_t rep = 0; rep < replicates; ++rep) {
      for (double& v : l) v = u(rng);
      err += std::abs(risk::empirical_cvar(l, alpha) - 0.95);
    }
    s.mean_abs_error.push_back(err / static_cast<double>(replicates));
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < s.n.size(); ++i) {
    mx += std::log(s.n[i]);
    my += std::log(s.mean_abs_error[i]);
  }
  mx /= static_cast<double>(s.n.size());
  my /= static_cast<double>(s.n.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < s.n.size(); ++i) {
    const double dx = std::log(s.n[i]) - mx;
    sxy += dx * (std::log(s.mean_abs_error[i]) - my);
    sxx += dx * dx;
  }
  s.slope = sxy / sxx;
  return s;
}

CheckResult cvar_slope(std::size_t replicates, std::uint64_t seed) {
  return timed("cvar_slope", [&](CheckResult& r) {
    const SlopeResult s = cvar_error_slope(replicates, seed);
    r.passed = s.slope >= -0.65 && s.slope <= -0.35;
    r.detail = fmt("log-log slope %.4f (errors %.3g at n=100, %.3g at n=1e5)", s.slope,
                   s.mean_abs_error.front(), s.mean_abs_error.back());
  });
}

BoundResult surrogate_bound_random(std::size_t pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  BoundResult r;
  for (std::size_t i = 0; i < pairs; ++i) {
    const GaussianLaw p{0.5 + 0.5 * u(rng), 0.5 * u(rng), 0.2 + 0.3 * (u(rng) + 1.0)};
    const GaussianLaw q{0.5 + 0.5 * u(rng), 0.5 * u(rng), 0.2 + 0.3 * (u(rng) + 1.0)};
    const double t0 = 0.5 + 0.5 * u(rng), t1 = 0.5 * u(rng);
    const Vec z = normals(kDraws, rng);
    for (double alpha : {0.5, 1.0}) r.cases.push_back(bound_case(p, q, t0, t1, alpha, z));
  }
  tally(r);
  return r;
}

BoundResult surrogate_bound_translated(const std::vector<double>& deltas, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Vec z = normals(kDraws, rng);
  const GaussianLaw p{0.6, 0.3, 0.4};
  BoundResult r;
  for (double d : deltas) {
    const GaussianLaw q{p.a + d, p.b, p.s};
    for (double alpha : {0.5, 1.0}) r.cases.push_back(bound_case(p, q, 0.3, 0.4, alpha, z));
  }
  tally(r);
  return r;
}

CheckResult surrogate_bound(std::size_t pairs, std::uint64_t seed) {
  return timed("surrogate_bound", [&](CheckResult& r) {
    const BoundResult rnd = surrogate_bound_random(pairs, seed);
    const BoundResult tr = surrogate_bound_translated({0.1, 0.5, 1.0}, seed + 1);
    const BoundResult same = surrogate_bound_translated({0.0}, seed + 2);
    bool same_zero = true;
    for (const BoundCase& c : same.cases) same_zero = same_zero && c.gap == 0.0;
    r.passed = rnd.violations == 0 && tr.violations == 0 && same_zero;
    r.detail = fmt("%g Gaussian pairs at alpha 0.5 and 1, %g violations, max gap/bound %.4f", static_cast<double>(rnd.cases.size() / 2),
                   static_cast<double>(rnd.violations + tr.violations),
                   std::max(rnd.max_ratio, tr.max_ratio)) +
               (same_zero ? "; p = q gives gap 0" : "; p = q gap nonzero");
  });
}

CheckResult coherence(std::size_t trials, std::uint64_t seed) {
  return timed("coherence", [&](CheckResult& r) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    std::size_t failures = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t k = 50 + t % 150;
      const risk::RiskLevel alpha(u(rng));
      Vec x(k), y(k), xy(k), up(k), shifted(k), scaled(k);
      const double shift = 5.0 * nd(rng), lambda = 10.0 * u(rng);
      for (std::size_t i = 0; i < k; ++i) {
        x[i] = nd(rng);
        y[i] = 2.0 * nd(rng);
        xy[i] = x[i] + y[i];
        up[i] = x[i] + std::abs(nd(rng));
        shifted[i] = x[i] + shift;
        scaled[i] = lambda * x[i];
      }
      auto cv = [&](const Vec& v) { return risk::empirical_cvar(v, alpha); };
      const double tol = 1e-10 * (1.0 + std::abs(cv(x)) + std::abs(shift) + lambda);
      if (cv(up) < cv(x) - tol) ++failures;                           // monotone
      if (std::abs(cv(shifted) - cv(x) - shift) > tol) ++failures;     // translation
      if (std::abs(cv(scaled) - lambda * cv(x)) > tol) ++failures;     // homogeneous
      if (cv(xy) > cv(x) + cv(y) + tol) ++failures;                    // subadditive
    }
    r.passed = failures == 0;
    r.detail = fmt("%g property failures over %g trials", static_cast<double>(failures),
                   static_cast<double>(trials));
  });
}

std::vector<CheckResult> run_suite(std::uint64_t seed) {
  return {ru_identity(1000, seed), cvar_slope(200, seed), surrogate_bound(100, seed),
          coherence(500, seed)};
}

}  // namespace gendfl::theory
