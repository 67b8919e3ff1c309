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

#include "gendfl/flow.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace gendfl::flow {

using ndgrad::Graph;
using ndgrad::Shape;
using ndgrad::Tensor;
using ndgrad::Var;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace {

constexpr const char* kFormat = "gendfl-flow";
constexpr int kVersion = 1;

std::string pname(std::size_t layer, const char* field) {
  return "l" + std::to_string(layer) + "." + field;
}

Shape param_shape(const FlowConfig& cfg, const std::string& field) {
  if (field == "w1") return {cfg.d_c + cfg.d_x, cfg.hidden};
  if (field == "b1") return {cfg.hidden};
  if (field == "w2") return {cfg.hidden, 2 * cfg.d_c};
  return {2 * cfg.d_c};
}

const Tensor& get(const FlowParams& p, std::size_t layer, const char* field) {
  const auto it = p.params.find(pname(layer, field));
  if (it == p.params.end()) {
    throw ConfigError("flow parameter " + pname(layer, field) + " missing");
  }
  return it->second;
}

Eigen::Map<const RowMat> as_mat(const Tensor& t) {
  return {t.data().data(), static_cast<Eigen::Index>(t.rows()),
          static_cast<Eigen::Index>(t.cols())};
}

void check_dims(const FlowConfig& cfg, std::size_t c_len, std::size_t x_len) {
  if (c_len != cfg.d_c || x_len != cfg.d_x) {
    throw ShapeError("flow expects c of length " + std::to_string(cfg.d_c) +
                     " and x of length " + std::to_string(cfg.d_x) + ", got " +
                     std::to_string(c_len) + " and " + std::to_string(x_len));
  }
}

// Tiles a [1, d] feature row to `rows` rows (gradient-preserving).
Var broadcast_rows(Var x, std::size_t rows) {
  if (x.value().rows() == rows) return x;
  if (x.value().rows() != 1) {
    throw ShapeError("flow: feature rows do not match sample rows");
  }
  return ndgrad::matmul(x.graph->constant(Tensor(Shape{rows, 1}, 1.0)), x);
}

struct ScaleShift {
  Var s, t;
};

ScaleShift conditioner(const BoundFlow& f, std::size_t l, Var kept, Var x) {
  Var inp = f.cfg.d_x > 0 ? ndgrad::concat({kept, x}, 1) : kept;
  Var h = ndgrad::tanh(ndgrad::matmul(inp, f.w1[l]) + f.b1[l]);
  Var o = ndgrad::matmul(h, f.w2[l]) + f.b2[l];
  const double sm = f.cfg.s_max;
  Var s = ndgrad::tanh(ndgrad::slice(o, 1, 0, f.cfg.d_c) * (1.0 / sm)) * sm *
          f.change[l];
  Var t = ndgrad::slice(o, 1, f.cfg.d_c, 2 * f.cfg.d_c) * f.change[l];
  return {s, t};
}

Var as_rows(Var v, std::size_t d) {
  if (v.value().rank() == 2) {
    if (v.value().cols() != d) throw ShapeError("flow: wrong coordinate count");
    return v;
  }
  if (v.value().numel() != d) throw ShapeError("flow: wrong coordinate count");
  // Broadcasting against a [1, d] zero promotes the vector to a row.
  return v + v.graph->constant(Tensor(Shape{1, d}, 0.0));
}

// Plain batched evaluation. Returns per-row log-scales summed over layers.
struct PlainPass {
  RowMat out;
  Eigen::VectorXd logdet;
};

void plain_conditioner(const FlowParams& p, std::size_t l, const RowMat& kept,
                       const RowMat& x, RowMat& s, RowMat& t) {
  const FlowConfig& cfg = p.cfg;
  const auto dc = static_cast<Eigen::Index>(cfg.d_c);
  RowMat inp(kept.rows(), kept.cols() + x.cols());
  inp << kept, x;
  const auto w1 = as_mat(get(p, l, "w1"));
  const auto b1 = as_mat(get(p, l, "b1"));
  const auto w2 = as_mat(get(p, l, "w2"));
  const auto b2 = as_mat(get(p, l, "b2"));
  RowMat h = (inp * w1).rowwise() + b1.row(0);
  h = h.array().tanh();
  RowMat o = (h * w2).rowwise() + b2.row(0);
  const std::vector<double> mask = layer_mask(cfg, l);
  s.resize(o.rows(), dc);
  t.resize(o.rows(), dc);
  for (Eigen::Index j = 0; j < dc; ++j) {
    const double change = 1.0 - mask[static_cast<std::size_t>(j)];
    s.col(j) = change * cfg.s_max * (o.col(j).array() / cfg.s_max).tanh();
    t.col(j) = change * o.col(dc + j);
  }
}

RowMat keep_cols(const RowMat& v, const std::vector<double>& mask) {
  RowMat k = v;
  for (Eigen::Index j = 0; j < v.cols(); ++j)
    k.col(j) *= mask[static_cast<std::size_t>(j)];
  return k;
}

PlainPass plain_forward(const FlowParams& p, RowMat c, const RowMat& x) {
  Eigen::VectorXd logdet = Eigen::VectorXd::Zero(c.rows());
  RowMat s, t;
  for (std::size_t l = 0; l < p.cfg.layers; ++l) {
    plain_conditioner(p, l, keep_cols(c, layer_mask(p.cfg, l)), x, s, t);
    c = ((c - t).array() * s.array().exp()).matrix();
    logdet += s.rowwise().sum();
  }
  return {std::move(c), std::move(logdet)};
}

PlainPass plain_inverse(const FlowParams& p, RowMat z, const RowMat& x) {
  Eigen::VectorXd logdet = Eigen::VectorXd::Zero(z.rows());
  RowMat s, t;
  for (std::size_t l = p.cfg.layers; l-- > 0;) {
    plain_conditioner(p, l, keep_cols(z, layer_mask(p.cfg, l)), x, s, t);
    z = (z.array() * (-s.array()).exp() + t.array()).matrix();
    logdet -= s.rowwise().sum();
  }
  return {std::move(z), std::move(logdet)};
}

RowMat row_of(const Vec& v) {
  RowMat m(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t j = 0; j < v.size(); ++j) m(0, static_cast<Eigen::Index>(j)) = v[j];
  return m;
}

Vec to_vec(const RowMat& m) {
  return Vec(m.data(), m.data() + m.size());
}

double std_normal_logpdf(const Eigen::Ref<const Eigen::RowVectorXd>& z) {
  return -0.5 * z.squaredNorm() -
         0.5 * static_cast<double>(z.size()) * std::log(2.0 * std::numbers::pi);
}

}  // namespace

void validate(const FlowConfig& cfg) {
  if (cfg.d_c == 0) throw ConfigError("flow: d_c must be >= 1");
  if (cfg.layers < 2) throw ConfigError("flow: at least 2 coupling layers");
  if (cfg.hidden == 0) throw ConfigError("flow: hidden width must be >= 1");
  if (!(cfg.s_max > 0.0) || !std::isfinite(cfg.s_max)) {
    throw ConfigError("flow: s_max must be positive and finite");
  }
}

std::vector<double> layer_mask(const FlowConfig& cfg, std::size_t layer) {
  std::vector<double> m(cfg.d_c, 0.0);
  if (cfg.d_c == 1) return m;
  for (std::size_t j = 0; j < cfg.d_c; ++j) m[j] = (j + layer) % 2 == 0 ? 1.0 : 0.0;
  return m;
}

std::size_t FlowParams::num_parameters() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params) n += t.numel();
  return n;
}

std::vector<std::string> parameter_order(const FlowConfig& cfg) {
  std::vector<std::string> out;
  for (std::size_t l = 0; l < cfg.layers; ++l)
    for (const char* f : {"w1", "b1", "w2", "b2"}) out.push_back(pname(l, f));
  return out;
}

FlowParams init_flow(const FlowConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  FlowParams p;
  p.cfg = cfg;
  std::mt19937_64 rng(seed);
  const double fan = static_cast<double>(cfg.d_c + cfg.d_x + cfg.hidden);
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan));
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    for (const char* f : {"w1", "b1", "w2", "b2"}) {
      Tensor t(param_shape(cfg, f));
      if (std::string(f) == "w1")
        for (double& v : t.storage()) v = normal(rng);
      p.params[pname(l, f)] = std::move(t);
    }
  }
  return p;
}

BoundFlow bind(Graph& g, const FlowParams& p, bool trainable) {
  validate(p.cfg);
  BoundFlow f;
  f.cfg = p.cfg;
  for (std::size_t l = 0; l < p.cfg.layers; ++l) {
    auto leaf = [&](const char* field) {
      const Tensor& t = get(p, l, field);
      if (t.shape() != param_shape(p.cfg, field)) {
        throw ShapeError("flow parameter " + pname(l, field) + " has shape " +
                         ndgrad::shape_string(t.shape()));
      }
      return trainable ? g.parameter(pname(l, field), t) : g.constant(t);
    };
    f.w1.push_back(leaf("w1"));
    f.b1.push_back(leaf("b1"));
    f.w2.push_back(leaf("w2"));
    f.b2.push_back(leaf("b2"));
    const std::vector<double> m = layer_mask(p.cfg, l);
    std::vector<double> inv(m.size());
    for (std::size_t j = 0; j < m.size(); ++j) inv[j] = 1.0 - m[j];
    f.keep.push_back(g.constant(Tensor::vector(m)));
    f.change.push_back(g.constant(Tensor::vector(inv)));
  }
  return f;
}

LatentVars forward_map(const BoundFlow& f, Var c, Var x) {
  c = as_rows(c, f.cfg.d_c);
  const std::size_t rows = c.value().rows();
  if (f.cfg.d_x > 0) x = broadcast_rows(as_rows(x, f.cfg.d_x), rows);
  Var logdet = c.graph->constant(Tensor(Shape{rows, 1}, 0.0));
  for (std::size_t l = 0; l < f.cfg.layers; ++l) {
    const ScaleShift st = conditioner(f, l, c * f.keep[l], x);
    c = (c - st.t) * ndgrad::exp(st.s);
    logdet = logdet + ndgrad::sum_axis(st.s, 1);
  }
  return {c, logdet};
}

Var inverse_map(const BoundFlow& f, Var z, Var x) {
  z = as_rows(z, f.cfg.d_c);
  const std::size_t rows = z.value().rows();
  if (f.cfg.d_x > 0) x = broadcast_rows(as_rows(x, f.cfg.d_x), rows);
  for (std::size_t l = f.cfg.layers; l-- > 0;) {
    const ScaleShift st = conditioner(f, l, z * f.keep[l], x);
    z = z * ndgrad::exp(-st.s) + st.t;
  }
  return z;
}

Var log_prob(const BoundFlow& f, Var c, Var x) {
  const LatentVars lv = forward_map(f, c, x);
  const double norm =
      0.5 * static_cast<double>(f.cfg.d_c) * std::log(2.0 * std::numbers::pi);
  Var sq = ndgrad::sum_axis(lv.z * lv.z, 1);
  return sq * (-0.5) + (-norm) + lv.logdet;
}

Var nll_loss(const BoundFlow& f, Var c, Var x) {
  if (c.value().numel() == 0) throw Error("nll_loss: empty batch");
  return -ndgrad::mean(log_prob(f, c, x));
}

Tensor standard_normal(std::size_t k, std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor t(Shape{k, d});
  for (double& v : t.storage()) v = normal(rng);
  return t;
}

Var sample(const BoundFlow& f, Var x_row, std::size_t k, std::mt19937_64& rng) {
  if (k == 0) throw ConfigError("sample: K must be >= 1");
  Var z = x_row.graph->constant(standard_normal(k, f.cfg.d_c, rng));
  return inverse_map(f, z, x_row);
}

Latent forward_map(const FlowParams& p, const Vec& c, const Vec& x) {
  check_dims(p.cfg, c.size(), x.size());
  const PlainPass pass = plain_forward(p, row_of(c), row_of(x));
  return {to_vec(pass.out), pass.logdet[0]};
}

Vec inverse_map(const FlowParams& p, const Vec& z, const Vec& x) {
  return inverse_with_logdet(p, z, x).z;
}

Latent inverse_with_logdet(const FlowParams& p, const Vec& z, const Vec& x) {
  check_dims(p.cfg, z.size(), x.size());
  const PlainPass pass = plain_inverse(p, row_of(z), row_of(x));
  return {to_vec(pass.out), pass.logdet[0]};
}

double log_prob(const FlowParams& p, const Vec& c, const Vec& x) {
  check_dims(p.cfg, c.size(), x.size());
  const PlainPass pass = plain_forward(p, row_of(c), row_of(x));
  return std_normal_logpdf(pass.out.row(0)) + pass.logdet[0];
}

double nll_loss(const FlowParams& p, const Eigen::MatrixXd& c,
                const Eigen::MatrixXd& x) {
  if (c.rows() == 0) throw Error("nll_loss: empty batch");
  if (c.rows() != x.rows()) throw ShapeError("nll_loss: row counts differ");
  check_dims(p.cfg, static_cast<std::size_t>(c.cols()),
             static_cast<std::size_t>(x.cols()));
  const PlainPass pass = plain_forward(p, c, x);
  double s = 0.0;
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    s += std_normal_logpdf(pass.out.row(i)) + pass.logdet[i];
  return -s / static_cast<double>(c.rows());
}

Eigen::MatrixXd sample(const FlowParams& p, const Vec& x, std::size_t k,
                       std::uint64_t seed) {
  if (k == 0) throw ConfigError("sample: K must be >= 1");
  check_dims(p.cfg, p.cfg.d_c, x.size());
  std::mt19937_64 rng(seed);
  const Tensor z = standard_normal(k, p.cfg.d_c, rng);
  const RowMat xs = row_of(x).replicate(static_cast<Eigen::Index>(k), 1);
  return plain_inverse(p, as_mat(z), xs).out;
}

std::string to_json(const FlowParams& p) {
  nlohmann::ordered_json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["d_c"] = p.cfg.d_c;
  j["d_x"] = p.cfg.d_x;
  j["layers"] = p.cfg.layers;
  j["hidden"] = p.cfg.hidden;
  j["s_max"] = p.cfg.s_max;
  std::vector<double> flat;
  for (const std::string& name : parameter_order(p.cfg)) {
    const auto it = p.params.find(name);
    if (it == p.params.end()) throw ConfigError("flow parameter " + name + " missing");
    flat.insert(flat.end(), it->second.storage().begin(), it->second.storage().end());
  }
  j["params"] = flat;
  return j.dump();
}

FlowParams from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("flow checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat) {
      throw SchemaError("not a gendfl flow checkpoint");
    }
    if (j.at("version").get<int>() != kVersion) {
      throw SchemaError("unsupported flow checkpoint version " +
                        j.at("version").dump());
    }
    FlowConfig cfg;
    cfg.d_c = j.at("d_c").get<std::size_t>();
    cfg.d_x = j.at("d_x").get<std::size_t>();
    cfg.layers = j.at("layers").get<std::size_t>();
    cfg.hidden = j.at("hidden").get<std::size_t>();
    cfg.s_max = j.at("s_max").get<double>();
    validate(cfg);
    const auto flat = j.at("params").get<std::vector<double>>();
    FlowParams p;
    p.cfg = cfg;
    std::size_t pos = 0;
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      for (const char* f : {"w1", "b1", "w2", "b2"}) {
        Tensor t(param_shape(cfg, f));
        if (pos + t.numel() > flat.size()) {
          throw SchemaError("flow checkpoint has too few parameter values");
        }
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                  flat.begin() + static_cast<std::ptrdiff_t>(pos + t.numel()),
                  t.storage().begin());
        pos += t.numel();
        p.params[pname(l, f)] = std::move(t);
      }
    }
    if (pos != flat.size()) {
      throw SchemaError("flow checkpoint parameter count " +
                        std::to_string(flat.size()) + " does not match " +
                        std::to_string(pos));
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed flow checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw SchemaError(std::string("flow checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const FlowParams& p) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << to_json(p) << '\n';
}

FlowParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace gendfl::flow
