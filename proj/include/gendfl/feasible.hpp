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

// Feasible decision sets and Euclidean projections onto them.

#pragma once

#include <cstddef>
#include <utility>
#include <variant>
#include <vector>

#include "gendfl/ndgrad.hpp"

namespace gendfl::solver {

using Vec = std::vector<double>;

// w in [0,1]^n with p^T w <= capacity. The capped simplex is p = 1,
// capacity = 1.
struct CapacitySet {
  Vec weights;
  double capacity = 1.0;
};

// Unit s-t flow on an R x C grid whose arcs point east or south. Source is
// the top-left node, sink the bottom-right. Arc order: all east arcs in
// row-major order, then all south arcs in row-major order.
struct GridFlowSet {
  std::size_t rows = 5;
  std::size_t cols = 5;
};

// lower <= w <= upper with sum(w) = total.
struct ScheduleSet {
  Vec lower;
  Vec upper;
  double total = 0.0;
};

using FeasibleSet = std::variant<CapacitySet, GridFlowSet, ScheduleSet>;

FeasibleSet capped_simplex(std::size_t n);
FeasibleSet weighted_capacity(Vec weights, double capacity);
FeasibleSet grid_flow(std::size_t rows, std::size_t cols);
FeasibleSet schedule(Vec lower, Vec upper, double total);

std::size_t dimension(const FeasibleSet& set);

// Throws ConfigError when the description admits no feasible point or has
// invalid data (non-positive weights, crossed bounds, ...).
void validate(const FeasibleSet& set);

struct Arc {
  std::size_t from;
  std::size_t to;
};
std::vector<Arc> grid_arcs(const GridFlowSet& g);

// Largest constraint residual (box, capacity, flow conservation, total).
double max_violation(const Vec& w, const FeasibleSet& set);

Vec project(const Vec& v, const FeasibleSet& set);

// Midpoint of the bounds, projected: the solver's starting point.
Vec initial_point(const FeasibleSet& set);

// Projection as a graph op. The backward pass applies the Jacobian of the
// projection on the face identified at the forward point.
ndgrad::Var project(ndgrad::Var v, const FeasibleSet& set);

}  // namespace gendfl::solver
