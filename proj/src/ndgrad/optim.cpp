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

#include <algorithm>
#include <cmath>

#include "gendfl/ndgrad.hpp"

namespace gendfl::ndgrad {

double finite_diff_check(Graph& graph,
                         const std::map<std::string, Tensor>& inputs,
                         double step) {
  if (!(step > 0.0)) throw Error("finite_diff_check: step must be positive");
  graph.forward(inputs);
  const std::map<std::string, Tensor> analytic = graph.backward();
  ParamMap params = graph.parameters();

  double worst = 0.0;
  for (auto& [name, value] : params) {
    const Tensor& g = analytic.at(name);
    for (std::size_t i = 0; i < value.numel(); ++i) {
      const double saved = value[i];
      value[i] = saved + step;
      graph.set_leaf(name, value);
      const double up = graph.forward().item();
      value[i] = saved - step;
      graph.set_leaf(name, value);
      const double down = graph.forward().item();
      value[i] = saved;
      graph.set_leaf(name, value);
      const double fd = (up - down) / (2.0 * step);
      worst = std::max(worst,
                       std::abs(g[i] - fd) / std::max(1.0, std::abs(g[i])));
    }
  }
  graph.forward();
  return worst;
}

void adam_step(ParamMap& params, const ParamMap& grads, AdamState& state) {
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) continue;
    if (!it->second.same_shape(g)) {
      throw ShapeError("adam_step: gradient shape mismatch for '" + name + "'");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) continue;
    Tensor& p = it->second;
    auto [mit, m_new] = state.m.try_emplace(name, Tensor(p.shape()));
    auto [vit, v_new] = state.v.try_emplace(name, Tensor(p.shape()));
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    if (!m.same_shape(p) || !v.same_shape(p)) {
      throw ShapeError("adam_step: accumulator shape mismatch for '" + name +
                       "'");
    }
    for (std::size_t i = 0; i < p.numel(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = c1 > 0 ? m[i] / c1 : m[i];
      const double vhat = c2 > 0 ? v[i] / c2 : v[i];
      p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

void sgd_step(ParamMap& params, const ParamMap& grads, double lr) {
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) continue;
    if (!it->second.same_shape(g)) {
      throw ShapeError("sgd_step: gradient shape mismatch for '" + name + "'");
    }
    for (std::size_t i = 0; i < g.numel(); ++i) it->second[i] -= lr * g[i];
  }
}

}  // namespace gendfl::ndgrad
