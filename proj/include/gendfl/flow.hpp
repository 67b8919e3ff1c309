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

// Conditional affine-coupling flow p_theta(c | x) with a standard normal base.
//
// Layer l keeps the coordinates where mask_l = 1 and transforms the rest:
//   z_u = (c_u - t_u) * exp(s_u),   c_u = z_u * exp(-s_u) + t_u,
// where (s, t) = conditioner([c * mask_l, x]) and s = s_max * tanh(raw).
// forward_map runs layers 0..L-1 (data to latent); inverse_map runs them
// backwards. The conditioner is Linear -> tanh -> Linear; the output layer
// starts at zero so a fresh flow is the identity.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gendfl/ndgrad.hpp"

namespace gendfl::flow {

using Vec = std::vector<double>;

struct FlowConfig {
  std::size_t d_c = 1;
  std::size_t d_x = 0;
  std::size_t layers = 4;
  std::size_t hidden = 64;
  double s_max = 3.0;
};

void validate(const FlowConfig& cfg);  // throws ConfigError

// Mask of layer l: coordinate j is kept when (j + l) is even. With d_c = 1
// no coordinate is kept and every layer rescales it conditioned on x alone.
std::vector<double> layer_mask(const FlowConfig& cfg, std::size_t layer);

// Parameters are named "l<i>.w1" [d_c + d_x, hidden], "l<i>.b1" [hidden],
// "l<i>.w2" [hidden, 2 d_c], "l<i>.b2" [2 d_c]. The first d_c outputs of the
// conditioner are raw log-scales, the last d_c are shifts.
struct FlowParams {
  FlowConfig cfg;
  ndgrad::ParamMap params;

  std::size_t num_parameters() const;
};

// Glorot-style normal init of w1; b1, w2 and b2 are zero.
FlowParams init_flow(const FlowConfig& cfg, std::uint64_t seed);

// Parameter names in checkpoint order (layer-major, then w1, b1, w2, b2).
std::vector<std::string> parameter_order(const FlowConfig& cfg);

// ---- graph form --------------------------------------------------------------

// Parameters bound into a graph. With trainable = false they are constants.
struct BoundFlow {
  FlowConfig cfg;
  std::vector<ndgrad::Var> w1, b1, w2, b2;
  std::vector<ndgrad::Var> keep, change;  // masks and their complements
};

BoundFlow bind(ndgrad::Graph& g, const FlowParams& p, bool trainable);

struct LatentVars {
  ndgrad::Var z;       // [B, d_c]
  ndgrad::Var logdet;  // [B, 1]
};

// c: [B, d_c], x: [B, d_x] (or [1, d_x] broadcast to every row).
LatentVars forward_map(const BoundFlow& f, ndgrad::Var c, ndgrad::Var x);
ndgrad::Var inverse_map(const BoundFlow& f, ndgrad::Var z, ndgrad::Var x);
// Per-row log density, shape [B, 1].
ndgrad::Var log_prob(const BoundFlow& f, ndgrad::Var c, ndgrad::Var x);
// Mean negative log-likelihood over the rows.
ndgrad::Var nll_loss(const BoundFlow& f, ndgrad::Var c, ndgrad::Var x);
// K reparameterised samples at one x: inverse_map of standard normal draws.
ndgrad::Var sample(const BoundFlow& f, ndgrad::Var x_row, std::size_t k,
                   std::mt19937_64& rng);

// ---- plain form --------------------------------------------------------------

struct Latent {
  Vec z;
  double logdet = 0.0;
};

Latent forward_map(const FlowParams& p, const Vec& c, const Vec& x);
Vec inverse_map(const FlowParams& p, const Vec& z, const Vec& x);
// inverse_map plus log|det dc/dz| (the field named z holds c).
Latent inverse_with_logdet(const FlowParams& p, const Vec& z, const Vec& x);
double log_prob(const FlowParams& p, const Vec& c, const Vec& x);
// Mean NLL of the rows of (c, x). Throws Error on an empty batch.
double nll_loss(const FlowParams& p, const Eigen::MatrixXd& c,
                const Eigen::MatrixXd& x);
// K x d_c samples at x; bit-identical for a fixed seed.
Eigen::MatrixXd sample(const FlowParams& p, const Vec& x, std::size_t k,
                       std::uint64_t seed);

// Standard normal [k, d] draws, row-major, from rng.
ndgrad::Tensor standard_normal(std::size_t k, std::size_t d,
                               std::mt19937_64& rng);

// ---- checkpoints ---------------------------------------------------------------

// JSON object with fields, in order: "format" ("gendfl-flow"), "version" (1),
// "d_c", "d_x", "layers", "hidden", "s_max", "params" (flat array of every
// tensor in parameter_order, each row-major). Doubles are written with
// round-trip precision so values reload bit-exactly.
void save_checkpoint(const std::string& path, const FlowParams& p);
FlowParams load_checkpoint(const std::string& path);  // SchemaError on bad files
std::string to_json(const FlowParams& p);
FlowParams from_json(const std::string& text);

}  // namespace gendfl::flow
