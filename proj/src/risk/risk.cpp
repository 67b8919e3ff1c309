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

#include "gendfl/risk.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

namespace gendfl::risk {

using ndgrad::CustomOp;
using ndgrad::Tensor;
using ndgrad::Var;

namespace {

void require_nonempty(std::span<const double> losses, const char* what) {
  if (losses.empty()) {
    throw Error(std::string(what) + ": empty loss sample");
  }
}

double sigmoid(double u) {
  if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

double softplus(double u) {
  return u > 0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

}  // namespace

RiskLevel::RiskLevel(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ConfigError("risk level alpha must lie in (0, 1], got " +
                      std::to_string(alpha));
  }
}

std::size_t tail_size(std::size_t k, RiskLevel alpha) {
  const double raw = std::ceil(alpha.value() * static_cast<double>(k) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(raw, 1.0)),
                                 1, std::max<std::size_t>(k, 1));
}

std::vector<std::size_t> tail_indices(std::span<const double> losses,
                                      RiskLevel alpha) {
  require_nonempty(losses, "tail_indices");
  const std::size_t m = tail_size(losses.size(), alpha);
  std::vector<std::size_t> idx(losses.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto worse = [&](std::size_t a, std::size_t b) {
    if (losses[a] != losses[b]) return losses[a] > losses[b];
    return a < b;
  };
  std::nth_element(idx.begin(), idx.begin() + (m - 1), idx.end(), worse);
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double empirical_var(std::span<const double> losses, RiskLevel alpha) {
  require_nonempty(losses, "empirical_var");
  std::vector<double> v(losses.begin(), losses.end());
  const std::size_t m = tail_size(v.size(), alpha);
  std::nth_element(v.begin(), v.begin() + (m - 1), v.end(),
                   std::greater<double>());
  return v[m - 1];
}

double empirical_cvar(std::span<const double> losses, RiskLevel alpha) {
  require_nonempty(losses, "empirical_cvar");
  std::vector<double> v(losses.begin(), losses.end());
  const std::size_t m = tail_size(v.size(), alpha);
  std::nth_element(v.begin(), v.begin() + (m - 1), v.end(),
                   std::greater<double>());
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) s += v[i];
  return s / static_cast<double>(m);
}

double ru_objective(std::span<const double> losses, RiskLevel alpha,
                    double eta) {
  require_nonempty(losses, "ru_objective");
  double s = 0.0;
  for (double l : losses) s += std::max(l - eta, 0.0);
  return eta + s / (alpha.value() * static_cast<double>(losses.size()));
}

RuSolution cvar_ru(std::span<const double> losses, RiskLevel alpha) {
  require_nonempty(losses, "cvar_ru");
  std::vector<double> v(losses.begin(), losses.end());
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  const double scale = 1.0 / (alpha.value() * static_cast<double>(k));
  // suffix[j] = sum of v[j..k)
  std::vector<double> suffix(k + 1, 0.0);
  for (std::size_t j = k; j-- > 0;) suffix[j] = suffix[j + 1] + v[j];

  RuSolution best{ru_objective(losses, alpha, v[0]), v[0]};
  for (std::size_t j = 0; j < k; ++j) {
    const double eta = v[j];
    // Entries strictly above eta are those after the last copy of eta.
    const std::size_t above =
        std::upper_bound(v.begin(), v.end(), eta) - v.begin();
    const double hinge =
        suffix[above] - static_cast<double>(k - above) * eta;
    const double val = eta + scale * hinge;
    const double tol = 1e-12 * std::max(1.0, std::abs(best.value));
    if (val < best.value - tol) {
      best = {val, eta};
    } else if (val <= best.value + tol && eta > best.eta) {
      best = {std::min(val, best.value), eta};
    }
  }
  return best;
}

double default_tau(std::span<const double> losses) {
  require_nonempty(losses, "default_tau");
  std::vector<double> v(losses.begin(), losses.end());
  std::sort(v.begin(), v.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  return 0.05 * (quantile(0.75) - quantile(0.25) + 1e-9);
}

double smoothed_cvar_value(std::span<const double> losses, RiskLevel alpha,
                           double tau, double eta) {
  require_nonempty(losses, "smoothed_cvar");
  if (!(tau > 0.0)) throw ConfigError("smoothing temperature must be > 0");
  double s = 0.0;
  for (double l : losses) s += tau * softplus((l - eta) / tau);
  return eta + s / (alpha.value() * static_cast<double>(losses.size()));
}

Var smoothed_cvar(Var losses, RiskLevel alpha, double tau, Var eta) {
  if (!(tau > 0.0)) throw ConfigError("smoothing temperature must be > 0");
  const double k = static_cast<double>(losses.value().numel());
  Var hinge = ndgrad::softplus((losses - eta) * (1.0 / tau)) * tau;
  return eta + ndgrad::sum(hinge) * (1.0 / (alpha.value() * k));
}

double smoothed_optimal_eta(std::span<const double> losses, RiskLevel alpha,
                            double tau, double hint) {
  require_nonempty(losses, "smoothed_optimal_eta");
  if (!(tau > 0.0)) throw ConfigError("smoothing temperature must be > 0");
  const double target = alpha.value() * static_cast<double>(losses.size());
  // mass(eta) = sum sigmoid((l - eta) / tau) decreases in eta.
  auto mass = [&](double eta, double* slope) {
    double m = 0.0, d = 0.0;
    for (double l : losses) {
      const double u = (l - eta) / tau;
      if (u > 40.0) {
        m += 1.0;
      } else if (u > -40.0) {
        const double s = sigmoid(u);
        m += s;
        d += s * (1.0 - s);
      }
    }
    if (slope) *slope = -d / tau;
    return m;
  };
  const auto [mn, mx] = std::minmax_element(losses.begin(), losses.end());
  double lo = *mn - 60.0 * tau, hi = *mx + 60.0 * tau;
  // With alpha = 1 the root sits at -infinity; the weights are saturated at lo.
  if (mass(lo, nullptr) <= target) return lo;
  double eta = std::isfinite(hint) ? std::clamp(hint, lo, hi) : 0.5 * (lo + hi);
  const double ftol = 1e-12 * std::max(1.0, target);
  for (int it = 0; it < 200; ++it) {
    double slope = 0.0;
    const double r = mass(eta, &slope) - target;
    if (std::abs(r) <= ftol) break;
    (r > 0.0 ? lo : hi) = eta;
    double next = slope < 0.0 ? eta - r / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == eta || hi - lo <= 1e-15 * std::max(1.0, std::abs(eta))) break;
    eta = next;
  }
  return eta;
}

Var smoothed_tail_weights(Var losses, RiskLevel alpha, double tau) {
  if (!(tau > 0.0)) throw ConfigError("smoothing temperature must be > 0");
  auto op = std::make_shared<CustomOp>();
  op->name = "smoothed_tail_weights";
  const double a = alpha.value();
  op->forward = [a, tau](std::span<const Tensor* const> in) {
    const Tensor& l = *in[0];
    const double eta = smoothed_optimal_eta(l.data(), RiskLevel(a), tau);
    Tensor out(l.shape());
    for (std::size_t i = 0; i < l.numel(); ++i)
      out[i] = sigmoid((l[i] - eta) / tau);
    return out;
  };
  op->backward = [tau](std::span<const Tensor* const>, const Tensor& s,
                       const Tensor& up) {
    Tensor g(s.shape());
    double big_d = 0.0, proj = 0.0;
    for (std::size_t i = 0; i < s.numel(); ++i) {
      const double d = s[i] * (1.0 - s[i]);
      big_d += d;
      proj += up[i] * d;
    }
    const double shift = big_d > 0.0 ? proj / big_d : 0.0;
    for (std::size_t i = 0; i < s.numel(); ++i) {
      const double d = s[i] * (1.0 - s[i]);
      g[i] = d / tau * (up[i] - shift);
    }
    return std::vector<Tensor>{g};
  };
  return ndgrad::custom(op, {losses});
}

Var tail_mean(Var losses, RiskLevel alpha) {
  auto op = std::make_shared<CustomOp>();
  op->name = "tail_mean";
  const double a = alpha.value();
  op->forward = [a](std::span<const Tensor* const> in) {
    return Tensor::scalar(empirical_cvar(in[0]->data(), RiskLevel(a)));
  };
  op->backward = [a](std::span<const Tensor* const> in, const Tensor&,
                     const Tensor& up) {
    const Tensor& l = *in[0];
    Tensor g(l.shape());
    const auto idx = tail_indices(l.data(), RiskLevel(a));
    const double w = up[0] / static_cast<double>(idx.size());
    for (std::size_t i : idx) g[i] = w;
    return std::vector<Tensor>{g};
  };
  return ndgrad::custom(op, {losses});
}

double wasserstein1_1d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error("wasserstein1_1d: empty sample");
  if (a.size() != b.size()) {
    throw Error("wasserstein1_1d: sample sizes differ (" +
                std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                ")");
  }
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
  return s / static_cast<double>(x.size());
}

}  // namespace gendfl::risk
