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

#include "gendfl/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace gendfl::train {

using ndgrad::Graph;
using ndgrad::ParamMap;
using ndgrad::Shape;
using ndgrad::Tensor;
using ndgrad::Var;
using problems::Dataset;
using problems::ProblemSpec;

namespace {

constexpr int kSkipPenaltySteps = 10;

Tensor to_tensor(const Eigen::MatrixXd& m) {
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) d.push_back(m(i, j));
  return Tensor::matrix(static_cast<std::size_t>(m.rows()),
                        static_cast<std::size_t>(m.cols()), std::move(d));
}

Tensor rows_tensor(const Eigen::MatrixXd& m, std::span<const std::size_t> idx) {
  std::vector<double> d;
  d.reserve(idx.size() * static_cast<std::size_t>(m.cols()));
  for (std::size_t i : idx)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      d.push_back(m(static_cast<Eigen::Index>(i), j));
  return Tensor::matrix(idx.size(), static_cast<std::size_t>(m.cols()), std::move(d));
}

bool all_finite(const ParamMap& grads) {
  return std::all_of(grads.begin(), grads.end(),
                     [](const auto& kv) { return kv.second.all_finite(); });
}

std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t batch,
                                                  std::mt19937_64& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < n; s += batch)
    out.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(s),
                     perm.begin() + static_cast<std::ptrdiff_t>(std::min(n, s + batch)));
  return out;
}

void require_data(const Dataset& data, const char* what) {
  if (data.size() == 0) throw ConfigError(std::string(what) + ": empty dataset");
  if (data.x.rows() != data.c.rows()) {
    throw ShapeError(std::string(what) + ": x and c row counts differ");
  }
}

flow::FlowConfig flow_config(const Dataset& data, const TrainConfig& cfg) {
  flow::FlowConfig f;
  f.d_c = static_cast<std::size_t>(data.c.cols());
  f.d_x = static_cast<std::size_t>(data.x.cols());
  f.layers = cfg.flow_layers;
  f.hidden = cfg.flow_hidden;
  f.s_max = cfg.s_max;
  return f;
}

// MLP forward on the graph: [B, d_x] -> [B, d_c].
Var mlp_forward(const std::map<std::string, Var>& p, Var x) {
  Var h = ndgrad::tanh(ndgrad::matmul(x, p.at("w1")) + p.at("b1"));
  return ndgrad::matmul(h, p.at("w2")) + p.at("b2");
}

using Objective = std::function<Var(Var pred, Var target)>;

// Minibatch Adam on a per-entry objective averaged over the batch.
void fit_mlp(PredictorMLP& m, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
             const TrainConfig& cfg, const Objective& objective, const char* what) {
  ndgrad::AdamState adam;
  adam.lr = cfg.mlp_lr;
  std::mt19937_64 rng(cfg.seed ^ 0x6d6c70u);
  for (int e = 0; e < cfg.mlp_epochs; ++e) {
    for (const auto& b : minibatches(static_cast<std::size_t>(x.rows()), cfg.batch, rng)) {
      Graph g;
      std::map<std::string, Var> p;
      for (const auto& [name, t] : m.params) p[name] = g.parameter(name, t);
      Var xb = g.constant(rows_tensor(x, b));
      Var yb = g.constant(rows_tensor(y, b));
      Var loss;
      try {
        loss = ndgrad::mean(objective(mlp_forward(p, xb), yb));
      } catch (const NonFiniteError& err) {
        throw Error(std::string(what) + " diverged: " + err.what());
      }
      ndgrad::adam_step(m.params, g.backward(loss), adam);
    }
  }
}

std::string dump_json_number(double v) {
  if (!std::isfinite(v)) return "null";
  return nlohmann::json(v).dump();
}

}  // namespace

void validate(const TrainConfig& cfg) {
  if (!(cfg.lr > 0.0)) throw ConfigError("train: learning rate must be > 0");
  if (cfg.epochs < 0) throw ConfigError("train: epochs must be >= 0");
  if (cfg.batch == 0) throw ConfigError("train: batch size must be >= 1");
  risk::RiskLevel alpha(cfg.alpha);
  if (cfg.k == 0) throw ConfigError("train: K must be >= 1");
  if (cfg.m_q == 0) throw ConfigError("train: M_q must be >= 1");
  if (!(cfg.beta >= 0.0)) throw ConfigError("train: beta must be >= 0");
  if (!(cfg.gamma >= 0.0)) throw ConfigError("train: gamma must be >= 0");
  if (cfg.proxy_epochs < 0 || cfg.mlp_epochs < 0) {
    throw ConfigError("train: epoch counts must be >= 0");
  }
  if (!(cfg.proxy_val_frac >= 0.0 && cfg.proxy_val_frac < 1.0)) {
    throw ConfigError("train: proxy_val_frac must lie in [0, 1)");
  }
  if (cfg.proxy_patience < 1) throw ConfigError("train: proxy_patience must be >= 1");
  if (!(cfg.proxy_lr > 0.0) || !(cfg.mlp_lr > 0.0)) {
    throw ConfigError("train: learning rates must be > 0");
  }
  solver::validate(cfg.solver);
}

Vec row(const Eigen::MatrixXd& m, Eigen::Index i) {
  Vec v(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) v[static_cast<std::size_t>(j)] = m(i, j);
  return v;
}

// ---- proxy -----------------------------------------------------------------------

flow::FlowParams fit_nll(const Dataset& data, const TrainConfig& cfg, int epochs,
                         double lr, std::vector<double>* trace) {
  require_data(data, "fit_nll");
  flow::FlowParams p = flow::init_flow(flow_config(data, cfg), cfg.seed);
  ndgrad::AdamState adam;
  adam.lr = lr;
  std::mt19937_64 rng(cfg.seed ^ 0x71u);

  // Seeded split: the last val_count rows of a permutation validate.
  std::vector<std::size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto val_count = static_cast<std::size_t>(
      std::floor(cfg.proxy_val_frac * static_cast<double>(data.size())));
  const std::vector<std::size_t> fit_rows(perm.begin(), perm.end() - static_cast<std::ptrdiff_t>(val_count));
  const std::vector<std::size_t> val_rows(perm.end() - static_cast<std::ptrdiff_t>(val_count), perm.end());
  if (fit_rows.empty()) throw ConfigError("fit_nll: validation split leaves no training rows");
  Eigen::MatrixXd val_c(static_cast<Eigen::Index>(val_rows.size()), data.c.cols());
  Eigen::MatrixXd val_x(static_cast<Eigen::Index>(val_rows.size()), data.x.cols());
  for (std::size_t i = 0; i < val_rows.size(); ++i) {
    val_c.row(static_cast<Eigen::Index>(i)) = data.c.row(static_cast<Eigen::Index>(val_rows[i]));
    val_x.row(static_cast<Eigen::Index>(i)) = data.x.row(static_cast<Eigen::Index>(val_rows[i]));
  }
  flow::FlowParams best = p;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int e = 0; e < epochs; ++e) {
    double total = 0.0;
    for (const auto& chunk : minibatches(fit_rows.size(), cfg.batch, rng)) {
      std::vector<std::size_t> b;
      for (std::size_t i : chunk) b.push_back(fit_rows[i]);
      Graph g;
      const flow::BoundFlow f = flow::bind(g, p, true);
      Var loss;
      try {
        loss = flow::nll_loss(f, g.constant(rows_tensor(data.c, b)),
                              g.constant(rows_tensor(data.x, b)));
      } catch (const NonFiniteError& err) {
        throw Error(std::string("proxy training diverged: ") + err.what());
      }
      const ParamMap grads = g.backward(loss);
      if (!all_finite(grads)) throw Error("proxy training diverged: non-finite gradient");
      ndgrad::adam_step(p.params, grads, adam);
      total += loss.value().item() * static_cast<double>(b.size());
    }
    if (trace) trace->push_back(total / static_cast<double>(fit_rows.size()));
    if (val_rows.empty()) {
      best = p;
      continue;
    }
    const double val = flow::nll_loss(p, val_c, val_x);
    if (val < best_val) {
      best_val = val;
      best = p;
      since_best = 0;
    } else if (++since_best >= cfg.proxy_patience) {
      break;
    }
  }
  return best;
}

ProxyModel train_proxy(const Dataset& data, const ProblemSpec& spec,
                       const TrainConfig& cfg) {
  validate(cfg);
  require_data(data, "train_proxy");
  return build_proxy(fit_nll(data, cfg, cfg.proxy_epochs, cfg.proxy_lr), data, spec, cfg);
}

ProxyModel build_proxy(const flow::FlowParams& q, const Dataset& data,
                       const ProblemSpec& spec, const TrainConfig& cfg) {
  validate(cfg);
  require_data(data, "build_proxy");
  ProxyModel proxy;
  proxy.q = q;
  proxy.alpha = cfg.alpha;
  proxy.x = data.x;
  const risk::RiskLevel alpha(cfg.alpha);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vec x = row(data.x, static_cast<Eigen::Index>(i));
    proxy.samples.push_back(flow::sample(proxy.q, x, cfg.m_q, cfg.seed * 1000003u + i));
    proxy.w_star.push_back(
        solver::solve_cvar_saa(spec, proxy.samples.back(), alpha, cfg.solver).w);
  }
  return proxy;
}

solver::Decision recompute_proxy_decision(const ProxyModel& proxy,
                                          const ProblemSpec& spec, std::size_t i,
                                          const solver::SolverConfig& cfg) {
  if (i >= proxy.samples.size()) throw ConfigError("proxy cache index out of range");
  return solver::solve_cvar_saa(spec, proxy.samples[i], risk::RiskLevel(proxy.alpha),
                                cfg);
}

// ---- Gen-DFL ---------------------------------------------------------------------

RegretTerm regret_theta_q(const flow::BoundFlow& theta, const Vec& x,
                          const Eigen::MatrixXd& q_samples, const Vec& w_star_q,
                          const ProblemSpec& spec, risk::RiskLevel alpha,
                          std::size_t k, std::mt19937_64& rng,
                          const solver::SolverConfig& solver_cfg) {
  Graph& g = *theta.w1.front().graph;
  Var samples = flow::sample(theta, g.constant(Tensor::vector(x)), k, rng);
  const solver::UnrolledDecision ud =
      solver::solve_cvar_saa_unrolled(spec, samples, alpha, solver_cfg);
  Var qs = g.constant(to_tensor(q_samples));
  Var star = g.constant(Tensor::vector(problems::losses(spec, q_samples, w_star_q)));
  Var gap = problems::losses(spec, qs, ud.w) - star;
  return {risk::tail_mean(gap, alpha), ud.decision.w};
}

RegretTerm regret_theta_q(const flow::BoundFlow& theta, const Vec& x,
                          const ProxyModel& proxy, const ProblemSpec& spec,
                          risk::RiskLevel alpha, std::size_t k, std::size_t m_q,
                          std::mt19937_64& rng,
                          const solver::SolverConfig& solver_cfg) {
  const Eigen::MatrixXd qs = flow::sample(proxy.q, x, m_q, rng());
  const Vec w_star = solver::solve_cvar_saa(spec, qs, alpha, solver_cfg).w;
  return regret_theta_q(theta, x, qs, w_star, spec, alpha, k, rng, solver_cfg);
}

LossTerms gendfl_loss(const flow::BoundFlow& theta, std::span<const std::size_t> batch,
                      const Dataset& data, const ProxyModel& proxy,
                      const ProblemSpec& spec, const TrainConfig& cfg,
                      std::mt19937_64& rng) {
  if (batch.empty()) throw ConfigError("gendfl_loss: empty batch");
  Graph& g = *theta.w1.front().graph;
  Var nll = flow::nll_loss(theta, g.constant(rows_tensor(data.c, batch)),
                           g.constant(rows_tensor(data.x, batch)));
  LossTerms out;
  out.nll = nll.value().item();
  out.loss = nll * cfg.gamma;
  out.mean_regret = std::numeric_limits<double>::quiet_NaN();
  if (cfg.beta > 0.0) {
    const risk::RiskLevel alpha(cfg.alpha);
    Var total = g.constant(Tensor::scalar(0.0));
    for (std::size_t i : batch) {
      if (i >= proxy.samples.size()) throw ConfigError("batch index outside proxy cache");
      const RegretTerm r = regret_theta_q(theta, row(data.x, static_cast<Eigen::Index>(i)),
                                          proxy.samples[i], proxy.w_star[i], spec,
                                          alpha, cfg.k, rng, cfg.solver);
      total = total + r.regret;
    }
    Var mean_regret = total * (1.0 / static_cast<double>(batch.size()));
    out.mean_regret = mean_regret.value().item();
    out.loss = out.loss + mean_regret * cfg.beta;
  }
  return out;
}

GenDflResult train_gendfl(const Dataset& data, const ProblemSpec& spec,
                          const ProxyModel& proxy, const TrainConfig& cfg) {
  validate(cfg);
  require_data(data, "train_gendfl");
  if (proxy.samples.size() != data.size()) {
    throw ConfigError("train_gendfl: proxy was fitted on a different dataset");
  }
  if (proxy.alpha != cfg.alpha && cfg.beta > 0.0) {
    throw ConfigError("train_gendfl: proxy decisions were cached at a different alpha");
  }
  GenDflResult res;
  res.theta = proxy.q;
  ndgrad::AdamState adam;
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x67656eu);
  std::mt19937_64 sample_rng(cfg.seed ^ 0x64666cu);
  std::ofstream log;
  if (!cfg.log_path.empty()) {
    log.open(cfg.log_path);
    if (!log) throw Error("cannot open training log '" + cfg.log_path + "'");
  }
  int penalty = 0;
  for (int e = 0; e < cfg.epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = e;
    double nll = 0.0, regret = 0.0, loss = 0.0;
    std::size_t seen = 0;
    for (const auto& b : minibatches(data.size(), cfg.batch, shuffle_rng)) {
      Graph g;
      const flow::BoundFlow theta = flow::bind(g, res.theta, true);
      LossTerms terms;
      ParamMap grads;
      bool ok = true;
      try {
        terms = gendfl_loss(theta, b, data, proxy, spec, cfg, sample_rng);
        grads = g.backward(terms.loss);
        ok = std::isfinite(terms.loss.value().item()) && all_finite(grads);
      } catch (const NonFiniteError&) {
        ok = false;
      }
      if (!ok) {
        ++rec.skipped_steps;
        penalty = kSkipPenaltySteps;
        continue;
      }
      adam.lr = penalty > 0 ? 0.5 * cfg.lr : cfg.lr;
      if (penalty > 0) --penalty;
      ndgrad::adam_step(res.theta.params, grads, adam);
      const double w = static_cast<double>(b.size());
      nll += terms.nll * w;
      regret += terms.mean_regret * w;
      loss += terms.loss.value().item() * w;
      seen += b.size();
    }
    const double denom = seen > 0 ? static_cast<double>(seen)
                                  : std::numeric_limits<double>::quiet_NaN();
    rec.nll = nll / denom;
    rec.mean_regret = regret / denom;
    rec.loss = loss / denom;
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    res.trace.push_back(rec);
    if (log) {
      log << "{\"epoch\":" << rec.epoch << ",\"nll\":" << dump_json_number(rec.nll)
          << ",\"mean_regret\":" << dump_json_number(rec.mean_regret)
          << ",\"loss\":" << dump_json_number(rec.loss)
          << ",\"wall_ms\":" << dump_json_number(rec.wall_ms)
          << ",\"skipped_steps\":" << rec.skipped_steps << "}\n";
      log.flush();
    }
  }
  return res;
}

solver::Decision gendfl_decide(const flow::FlowParams& theta, const ProblemSpec& spec,
                               const Vec& x, risk::RiskLevel alpha, std::size_t k,
                               std::uint64_t seed, const solver::SolverConfig& cfg) {
  return solver::solve_cvar_saa(spec, flow::sample(theta, x, k, seed), alpha, cfg);
}

// ---- point-estimate baselines -------------------------------------------------------

Eigen::MatrixXd PredictorMLP::predict(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.cols()) != d_x) {
    throw ShapeError("predictor expects " + std::to_string(d_x) + " features");
  }
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  auto mat = [&](const char* n) {
    const Tensor& t = params.at(n);
    return Eigen::Map<const RowMat>(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                                    static_cast<Eigen::Index>(t.cols()));
  };
  Eigen::MatrixXd h = (x * mat("w1")).rowwise() + mat("b1").row(0);
  h = h.array().tanh();
  return (h * mat("w2")).rowwise() + mat("b2").row(0);
}

Vec PredictorMLP::predict(const Vec& x) const {
  Eigen::MatrixXd m(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) m(0, static_cast<Eigen::Index>(j)) = x[j];
  return row(predict(m), 0);
}

PredictorMLP init_mlp(std::size_t d_x, std::size_t d_c, std::size_t hidden,
                      std::uint64_t seed) {
  if (d_c == 0 || hidden == 0) throw ConfigError("predictor: empty layer");
  PredictorMLP m;
  m.d_x = d_x;
  m.d_c = d_c;
  m.hidden = hidden;
  std::mt19937_64 rng(seed);
  auto glorot = [&](std::size_t in, std::size_t out) {
    std::normal_distribution<double> n(0.0, std::sqrt(2.0 / static_cast<double>(in + out)));
    Tensor t(Shape{in, out});
    for (double& v : t.storage()) v = n(rng);
    return t;
  };
  m.params["w1"] = glorot(d_x, hidden);
  m.params["b1"] = Tensor(Shape{hidden});
  m.params["w2"] = Tensor(Shape{hidden, d_c});  // starts as a constant map
  m.params["b2"] = Tensor(Shape{d_c});
  return m;
}

PredictorMLP train_pto(const Dataset& data, const TrainConfig& cfg) {
  validate(cfg);
  require_data(data, "train_pto");
  PredictorMLP m = init_mlp(static_cast<std::size_t>(data.x.cols()),
                            static_cast<std::size_t>(data.c.cols()), cfg.mlp_hidden,
                            cfg.seed);
  const Eigen::RowVectorXd mean = data.c.colwise().mean();
  for (std::size_t j = 0; j < m.d_c; ++j) m.params["b2"][j] = mean(static_cast<Eigen::Index>(j));
  fit_mlp(m, data.x, data.c, cfg,
          [](Var pred, Var target) {
            Var r = pred - target;
            return r * r;
          },
          "PTO training");
  return m;
}

double ru_risk(std::span<const double> targets, double g, risk::RiskLevel alpha) {
  if (targets.empty()) throw Error("ru_risk: empty targets");
  double s = 0.0;
  for (double y : targets) s += g + std::max(y - g, 0.0) / alpha.value();
  return s / static_cast<double>(targets.size());
}

PredictorMLP train_cvar_regressor(const Dataset& data, const ProblemSpec& spec,
                                  risk::RiskLevel alpha, const TrainConfig& cfg) {
  validate(cfg);
  require_data(data, "train_cvar_regressor");
  const Eigen::MatrixXd y = spec.sign * data.c;
  PredictorMLP m = init_mlp(static_cast<std::size_t>(data.x.cols()),
                            static_cast<std::size_t>(data.c.cols()), cfg.mlp_hidden,
                            cfg.seed);
  const Eigen::RowVectorXd mean = y.colwise().mean();
  for (std::size_t j = 0; j < m.d_c; ++j) m.params["b2"][j] = mean(static_cast<Eigen::Index>(j));
  const double inv_alpha = 1.0 / alpha.value();
  fit_mlp(m, data.x, y, cfg,
          [inv_alpha](Var g, Var target) {
            return g + ndgrad::max_const(target - g, 0.0) * inv_alpha;
          },
          "CVaR regressor training");
  // Fold the sign into the output layer so predictions are costs.
  for (const char* n : {"w2", "b2"})
    for (double& v : m.params[n].storage()) v *= spec.sign;
  return m;
}

double regressor_ru_risk(const PredictorMLP& g, const Dataset& data,
                         const ProblemSpec& spec, risk::RiskLevel alpha) {
  require_data(data, "regressor_ru_risk");
  const Eigen::MatrixXd pred = spec.sign * g.predict(data.x);
  const Eigen::MatrixXd y = spec.sign * data.c;
  double s = 0.0;
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    for (Eigen::Index j = 0; j < y.cols(); ++j)
      s += pred(i, j) + std::max(y(i, j) - pred(i, j), 0.0) / alpha.value();
  return s / static_cast<double>(y.size());
}

void save_mlp(const std::string& path, const PredictorMLP& m) {
  nlohmann::ordered_json j;
  j["format"] = "gendfl-mlp";
  j["version"] = 1;
  j["d_x"] = m.d_x;
  j["d_c"] = m.d_c;
  j["hidden"] = m.hidden;
  std::vector<double> flat;
  for (const char* n : {"w1", "b1", "w2", "b2"}) {
    const auto& s = m.params.at(n).storage();
    flat.insert(flat.end(), s.begin(), s.end());
  }
  j["params"] = flat;
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << j.dump() << '\n';
}

PredictorMLP load_mlp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    const auto j = nlohmann::json::parse(ss.str());
    if (j.at("format").get<std::string>() != "gendfl-mlp" || j.at("version").get<int>() != 1) {
      throw SchemaError(path + ": not a version-1 gendfl predictor checkpoint");
    }
    PredictorMLP m = init_mlp(j.at("d_x").get<std::size_t>(), j.at("d_c").get<std::size_t>(),
                              j.at("hidden").get<std::size_t>(), 0);
    const auto flat = j.at("params").get<std::vector<double>>();
    std::size_t pos = 0;
    for (const char* n : {"w1", "b1", "w2", "b2"}) {
      auto& s = m.params.at(n).storage();
      if (pos + s.size() > flat.size()) throw SchemaError(path + ": too few parameters");
      std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                flat.begin() + static_cast<std::ptrdiff_t>(pos + s.size()), s.begin());
      pos += s.size();
    }
    if (pos != flat.size()) throw SchemaError(path + ": parameter count mismatch");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path + ": malformed predictor checkpoint: " + e.what());
  } catch (const ConfigError& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

}  // namespace gendfl::train
