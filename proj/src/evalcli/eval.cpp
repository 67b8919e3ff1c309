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

#include "gendfl/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

#include "gendfl/errors.hpp"
#include "gendfl/flow.hpp"
#include "json.hpp"

namespace gendfl::eval {

namespace {

using json = nlohmann::json;
using problems::Family;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// RFC-4180 quoting for free-text fields.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

// ---- threading -------------------------------------------------------------------------

std::size_t thread_count() {
  if (const char* env = std::getenv("GENDFL_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

namespace {
// Nested parallel_for calls run inline so sweep cells do not oversubscribe.
thread_local bool in_worker = false;
}  // namespace

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = in_worker ? 1 : std::min(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto work = [&] {
    in_worker = true;
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (first) std::rethrow_exception(first);
}

// ---- metric -----------------------------------------------------------------------------

void validate(const EvalConfig& cfg) {
  if (cfg.alpha_eval.empty()) throw ConfigError("eval.alpha_eval must not be empty");
  for (double a : cfg.alpha_eval) {
    if (!(a > 0.0 && a <= 1.0)) {
      throw ConfigError("eval.alpha_eval entries must lie in (0, 1], got " +
                        std::to_string(a));
    }
  }
  if (cfg.m < 100) throw ConfigError("eval.m must be at least 100");
  if (cfg.holdout == 0) throw ConfigError("eval.holdout must be positive");
  if (cfg.seeds.empty()) throw ConfigError("eval.seeds must not be empty");
  if (!(cfg.min_denominator >= 0.0)) throw ConfigError("eval.min_denominator must be >= 0");
  solver::validate(cfg.oracle);
}

Sampler truth_sampler(const problems::GroundTruth& truth) {
  return [truth](const Vec& x, std::size_t m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return problems::sample_conditional(truth, x, m, rng);
  };
}

Sampler flow_sampler(const flow::FlowParams& q) {
  return [q](const Vec& x, std::size_t m, std::uint64_t seed) {
    return flow::sample(q, x, m, seed);
  };
}

std::vector<OracleCase> build_oracle(const problems::ProblemSpec& spec,
                                     const Eigen::MatrixXd& holdout_x,
                                     const Sampler& sampler, risk::RiskLevel alpha,
                                     std::size_t m, std::uint64_t seed,
                                     const solver::SolverConfig& cfg) {
  if (m == 0) throw ConfigError("oracle sample count must be positive");
  std::vector<OracleCase> cases(static_cast<std::size_t>(holdout_x.rows()));
  parallel_for(cases.size(), [&](std::size_t i) {
    OracleCase& oc = cases[i];
    oc.x = train::row(holdout_x, static_cast<Eigen::Index>(i));
    oc.samples = sampler(oc.x, m, seed * 1000003u + i);
    oc.w_star = solver::solve_cvar_saa(spec, oc.samples, alpha, cfg).w;
    const Vec l = problems::losses(spec, oc.samples, oc.w_star);
    double s = 0.0;
    for (double v : l) s += v;
    oc.expected_star = s / static_cast<double>(l.size());
  });
  return cases;
}

RegretResult score(const problems::ProblemSpec& spec, const std::vector<OracleCase>& cases,
                   const std::vector<Vec>& decisions, risk::RiskLevel alpha,
                   double min_denominator) {
  if (decisions.size() != cases.size()) {
    throw ShapeError("score: " + std::to_string(decisions.size()) + " decisions for " +
                     std::to_string(cases.size()) + " cases");
  }
  if (cases.empty()) throw Error("score: no held-out cases");
  RegretResult r;
  double rel = 0.0, abs_sum = 0.0;
  r.min_regret = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const OracleCase& oc = cases[i];
    const Vec hat = problems::losses(spec, oc.samples, decisions[i]);
    const Vec star = problems::losses(spec, oc.samples, oc.w_star);
    Vec gap(hat.size());
    for (std::size_t k = 0; k < gap.size(); ++k) gap[k] = hat[k] - star[k];
    const double regret = risk::empirical_cvar(gap, alpha);
    abs_sum += regret;
    r.min_regret = std::min(r.min_regret, regret);
    const double den = std::abs(oc.expected_star);
    if (den < min_denominator) {
      ++r.skipped;
      continue;
    }
    rel += regret / den;
    ++r.valid;
  }
  r.mean_abs_regret = abs_sum / static_cast<double>(cases.size());
  r.percent = r.valid > 0 ? 100.0 * rel / static_cast<double>(r.valid) : kNaN;
  return r;
}

RegretResult relative_regret(const DecisionRule& model, const problems::ProblemSpec& spec,
                             const Eigen::MatrixXd& holdout_x, const Sampler& sampler,
                             risk::RiskLevel alpha, std::size_t m, std::uint64_t seed,
                             double min_denominator) {
  const auto cases = build_oracle(spec, holdout_x, sampler, alpha, m, seed);
  std::vector<Vec> decisions(cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i) decisions[i] = model(cases[i].x, i);
  return score(spec, cases, decisions, alpha, min_denominator);
}

// ---- config ------------------------------------------------------------------------------

ModelKind parse_model_kind(const std::string& s) {
  if (s == "gendfl") return ModelKind::kGenDfl;
  if (s == "pto") return ModelKind::kPto;
  if (s == "cvar-reg") return ModelKind::kCvarRegressor;
  throw ConfigError("unknown model kind '" + s + "' (expected gendfl, pto or cvar-reg)");
}

std::string model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::kGenDfl: return "gendfl";
    case ModelKind::kPto: return "pto";
    case ModelKind::kCvarRegressor: return "cvar-reg";
  }
  return "unknown";
}

namespace {

void check_keys(const json& obj, const char* section,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(section) + " must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + section);
  }
}

template <typename T>
void read(const json& obj, const char* section, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(section) + "." + key + " has the wrong type");
  }
}

template <typename T>
std::vector<T> read_list(const json& obj, const char* section, const char* key) {
  std::vector<T> out;
  if (!obj.contains(key)) return out;
  const json& v = obj.at(key);
  try {
    if (v.is_array()) return v.get<std::vector<T>>();
    out.push_back(v.get<T>());
  } catch (const json::exception&) {
    throw ConfigError(std::string(section) + "." + key + " must be a number or list");
  }
  return out;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

ModelSpec parse_model(const json& m) {
  ModelSpec s;
  if (m.is_string()) {
    s.kind = parse_model_kind(m.get<std::string>());
    s.name = m.get<std::string>();
    return s;
  }
  check_keys(m, "models[]", {"name", "kind", "alpha_train", "beta", "k"});
  std::string kind = "gendfl";
  read(m, "models[]", "kind", kind);
  s.kind = parse_model_kind(kind);
  s.name = kind;
  read(m, "models[]", "name", s.name);
  if (m.contains("alpha_train")) {
    double a = 0;
    read(m, "models[]", "alpha_train", a);
    s.alpha_train = a;
  }
  if (m.contains("beta")) {
    double b = 0;
    read(m, "models[]", "beta", b);
    s.beta = b;
  }
  if (m.contains("k")) {
    std::size_t k = 0;
    read(m, "models[]", "k", k);
    s.k = k;
  }
  if (s.name.empty()) throw ConfigError("model name must not be empty");
  return s;
}

}  // namespace

ExperimentConfig parse_experiment(const std::string& json_text) {
  const json root = parse_json(json_text);
  check_keys(root, "config", {"problem", "generator", "train", "eval", "models", "sweep"});
  ExperimentConfig cfg;
  if (root.contains("problem")) {
    const json& p = root["problem"];
    check_keys(p, "problem", {"family", "energy_csv", "energy_days"});
    std::string family = problems::family_name(cfg.family);
    read(p, "problem", "family", family);
    cfg.family = problems::parse_family(family);
    read(p, "problem", "energy_csv", cfg.energy_csv);
    read(p, "problem", "energy_days", cfg.energy_days);
  }
  if (root.contains("generator")) {
    const json& g = root["generator"];
    check_keys(g, "generator", {"n", "d_x", "d_c", "deg", "sigma", "factor_rank", "grid"});
    read(g, "generator", "n", cfg.gen.n);
    read(g, "generator", "d_x", cfg.gen.d_x);
    read(g, "generator", "d_c", cfg.gen.d_c);
    if (cfg.family == Family::kShortestPath && !g.contains("d_c")) cfg.gen.d_c = 0;
    read(g, "generator", "deg", cfg.gen.deg);
    read(g, "generator", "sigma", cfg.gen.sigma);
    read(g, "generator", "factor_rank", cfg.gen.factor_rank);
    read(g, "generator", "grid", cfg.gen.grid);
  }
  if (cfg.family == Family::kShortestPath && !root.contains("generator")) cfg.gen.d_c = 0;
  if (root.contains("train")) {
    const json& t = root["train"];
    check_keys(t, "train",
               {"lr", "epochs", "batch", "alpha", "k", "m_q", "beta", "gamma", "flow_layers",
                "flow_hidden", "s_max", "proxy_epochs", "proxy_lr", "proxy_val_frac",
                "proxy_patience", "mlp_epochs", "mlp_lr", "mlp_hidden", "unroll_steps",
                "solver_restarts", "solver_max_iter"});
    auto& tc = cfg.train;
    read(t, "train", "lr", tc.lr);
    read(t, "train", "epochs", tc.epochs);
    read(t, "train", "batch", tc.batch);
    read(t, "train", "alpha", tc.alpha);
    read(t, "train", "k", tc.k);
    read(t, "train", "m_q", tc.m_q);
    read(t, "train", "beta", tc.beta);
    read(t, "train", "gamma", tc.gamma);
    read(t, "train", "flow_layers", tc.flow_layers);
    read(t, "train", "flow_hidden", tc.flow_hidden);
    read(t, "train", "s_max", tc.s_max);
    read(t, "train", "proxy_epochs", tc.proxy_epochs);
    read(t, "train", "proxy_lr", tc.proxy_lr);
    read(t, "train", "proxy_val_frac", tc.proxy_val_frac);
    read(t, "train", "proxy_patience", tc.proxy_patience);
    read(t, "train", "mlp_epochs", tc.mlp_epochs);
    read(t, "train", "mlp_lr", tc.mlp_lr);
    read(t, "train", "mlp_hidden", tc.mlp_hidden);
    read(t, "train", "unroll_steps", tc.solver.unroll_steps);
    read(t, "train", "solver_restarts", tc.solver.restarts);
    read(t, "train", "solver_max_iter", tc.solver.max_iter);
  }
  if (root.contains("eval")) {
    const json& e = root["eval"];
    check_keys(e, "eval", {"alpha_eval", "m", "holdout", "seeds", "num_seeds"});
    if (e.contains("alpha_eval")) cfg.eval.alpha_eval = read_list<double>(e, "eval", "alpha_eval");
    read(e, "eval", "m", cfg.eval.m);
    read(e, "eval", "holdout", cfg.eval.holdout);
    if (e.contains("seeds") && e.contains("num_seeds")) {
      throw ConfigError("eval: give either seeds or num_seeds, not both");
    }
    if (e.contains("seeds")) cfg.eval.seeds = read_list<std::uint64_t>(e, "eval", "seeds");
    if (e.contains("num_seeds")) {
      std::size_t n = 0;
      read(e, "eval", "num_seeds", n);
      cfg.eval.seeds.clear();
      for (std::size_t s = 0; s < n; ++s) cfg.eval.seeds.push_back(s);
    }
  }
  if (!root.contains("models")) throw ConfigError("config must list models");
  const json& models = root["models"];
  if (!models.is_array() || models.empty()) {
    throw ConfigError("models must be a non-empty list");
  }
  for (const json& m : models) cfg.models.push_back(parse_model(m));
  for (std::size_t i = 0; i < cfg.models.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.models.size(); ++j)
      if (cfg.models[i].name == cfg.models[j].name) {
        throw ConfigError("duplicate model name '" + cfg.models[i].name + "'");
      }

  validate(cfg.eval);
  train::validate(cfg.train);
  for (const ModelSpec& m : cfg.models) {
    if (m.alpha_train) risk::RiskLevel check(*m.alpha_train);
    if (m.beta && !(*m.beta >= 0.0)) throw ConfigError("model beta must be >= 0");
    if (m.k && *m.k == 0) throw ConfigError("model k must be positive");
  }
  if (cfg.family != Family::kEnergy) problems::validate(cfg.gen);
  return cfg;
}

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment(ss.str());
}

// ---- experiment runner -----------------------------------------------------------

namespace {

double model_alpha(const ModelSpec& m, const train::TrainConfig& t) {
  return m.alpha_train.value_or(t.alpha);
}

}  // namespace

SplitData make_split(const ExperimentConfig& cfg, std::uint64_t seed) {
  SplitData sd;
  if (cfg.family == Family::kEnergy) {
    const auto days = cfg.energy_csv.empty()
                          ? problems::synthetic_energy_prices(cfg.energy_days, seed)
                          : problems::read_energy_prices(cfg.energy_csv);
    problems::Generated all = problems::energy_instances(days);
    const Eigen::Index n = all.data.x.rows();
    const Eigen::Index h = static_cast<Eigen::Index>(cfg.eval.holdout);
    if (n < h + 2) {
      throw ConfigError("energy data has " + std::to_string(n) + " pairs; need more than holdout + 1");
    }
    // The last days are held out so training never sees them.
    sd.train.spec = all.spec;
    sd.train.data.x = all.data.x.topRows(n - h);
    sd.train.data.c = all.data.c.topRows(n - h);
    sd.holdout_x = all.data.x.bottomRows(h);
    return sd;
  }
  problems::GenConfig g = cfg.gen;
  g.seed = seed;
  sd.train = problems::generate(cfg.family, g);
  const problems::Dataset hold =
      problems::resample(*sd.train.data.truth, cfg.eval.holdout, seed ^ 0x686f6c646f7574ULL);
  sd.holdout_x = hold.x;
  return sd;
}

std::vector<OracleCase> experiment_oracle(const ExperimentConfig& cfg, const SplitData& split,
                                          std::uint64_t seed, double alpha_eval,
                                          const flow::FlowParams* proxy) {
  Sampler sampler;
  if (cfg.family == Family::kEnergy) {
    if (!proxy) throw ConfigError("energy evaluation needs a proxy flow");
    sampler = flow_sampler(*proxy);
  } else {
    sampler = truth_sampler(*split.train.data.truth);
  }
  return build_oracle(split.train.spec, split.holdout_x, sampler, risk::RiskLevel(alpha_eval),
                      cfg.eval.m, seed ^ 0x6f7261636c65ULL, cfg.eval.oracle);
}

std::vector<Vec> decide_gendfl(const flow::FlowParams& theta, const problems::ProblemSpec& spec,
                               const Eigen::MatrixXd& holdout_x, double alpha_train,
                               std::size_t k, std::uint64_t seed,
                               const solver::SolverConfig& cfg) {
  std::vector<Vec> out(static_cast<std::size_t>(holdout_x.rows()));
  parallel_for(out.size(), [&](std::size_t i) {
    out[i] = train::gendfl_decide(theta, spec, train::row(holdout_x, static_cast<Eigen::Index>(i)),
                                  risk::RiskLevel(alpha_train), k,
                                  seed * 1000003u + 7919u + i, cfg)
                 .w;
  });
  return out;
}

std::vector<Vec> decide_point(const train::PredictorMLP& g, const problems::ProblemSpec& spec,
                              const Eigen::MatrixXd& holdout_x, const solver::SolverConfig& cfg) {
  std::vector<Vec> out(static_cast<std::size_t>(holdout_x.rows()));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vec c_hat = g.predict(train::row(holdout_x, static_cast<Eigen::Index>(i)));
    out[i] = solver::solve_pointwise(spec, c_hat, cfg).w;
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Progress& progress) {
  validate(cfg.eval);
  train::validate(cfg.train);
  if (cfg.models.empty()) throw ConfigError("no models to run");
  auto say = [&](const std::string& s) {
    if (progress) progress(s);
  };
  const bool needs_flow =
      cfg.family == Family::kEnergy ||
      std::any_of(cfg.models.begin(), cfg.models.end(),
                  [](const ModelSpec& m) { return m.kind == ModelKind::kGenDfl; });

  ExperimentResult result;
  for (std::uint64_t seed : cfg.eval.seeds) {
    train::TrainConfig tc = cfg.train;
    tc.seed = seed;

    auto base_row = [&](const ModelSpec& m, double alpha_eval) {
      RegretReport r;
      r.model = m.name;
      r.family = cfg.family;
      r.deg = cfg.family == Family::kEnergy ? 0 : cfg.gen.deg;
      r.sigma = cfg.family == Family::kEnergy ? 0.0 : cfg.gen.sigma;
      r.alpha_train = model_alpha(m, cfg.train);
      r.alpha_eval = alpha_eval;
      r.seed = seed;
      r.regret_pct = kNaN;
      r.mean_abs_regret = kNaN;
      r.min_regret = kNaN;
      return r;
    };
    auto fail_all = [&](const std::string& why) {
      for (const ModelSpec& m : cfg.models)
        for (double a : cfg.eval.alpha_eval) {
          RegretReport r = base_row(m, a);
          r.error = why;
          result.rows.push_back(r);
        }
    };

    // Shared per-seed stages: data, proxy fit, oracles.
    SplitData sd;
    flow::FlowParams q;
    std::vector<std::vector<OracleCase>> oracles;
    double q_fit_s = 0.0;
    try {
      say("seed " + std::to_string(seed) + ": data");
      sd = make_split(cfg, seed);
      if (needs_flow) {
        say("seed " + std::to_string(seed) + ": proxy fit");
        const auto t0 = std::chrono::steady_clock::now();
        q = train::fit_nll(sd.train.data, tc, tc.proxy_epochs, tc.proxy_lr);
        q_fit_s = seconds_since(t0);
      }
      for (double a : cfg.eval.alpha_eval) {
        say("seed " + std::to_string(seed) + ": oracle alpha_eval=" + fmt("%g", a));
        oracles.push_back(experiment_oracle(cfg, sd, seed, a, &q));
      }
    } catch (const std::exception& e) {
      fail_all(std::string("seed setup failed: ") + e.what());
      continue;
    }

    const problems::ProblemSpec& spec = sd.train.spec;
    const auto n_hold = static_cast<std::size_t>(sd.holdout_x.rows());
    std::map<double, train::ProxyModel> proxies;  // keyed by alpha_train

    for (const ModelSpec& m : cfg.models) {
      std::vector<Vec> decisions(n_hold);
      double runtime = 0.0;
      std::string error;
      try {
        say("seed " + std::to_string(seed) + ": model " + m.name);
        const auto t0 = std::chrono::steady_clock::now();
        const double a_train = model_alpha(m, cfg.train);
        train::TrainConfig mc = tc;
        mc.alpha = a_train;
        if (m.beta) mc.beta = *m.beta;
        if (m.k) mc.k = *m.k;
        switch (m.kind) {
          case ModelKind::kGenDfl: {
            auto it = proxies.find(a_train);
            if (it == proxies.end()) {
              it = proxies.emplace(a_train, train::build_proxy(q, sd.train.data, spec, mc)).first;
            }
            const train::GenDflResult fit = train::train_gendfl(sd.train.data, spec, it->second, mc);
            decisions = decide_gendfl(fit.theta, spec, sd.holdout_x, a_train, mc.k, seed, mc.solver);
            runtime += q_fit_s;
            break;
          }
          case ModelKind::kPto: {
            decisions = decide_point(train::train_pto(sd.train.data, mc), spec, sd.holdout_x,
                                     mc.solver);
            break;
          }
          case ModelKind::kCvarRegressor: {
            decisions = decide_point(
                train::train_cvar_regressor(sd.train.data, spec, risk::RiskLevel(a_train), mc),
                spec, sd.holdout_x, mc.solver);
            break;
          }
        }
        runtime += seconds_since(t0);
      } catch (const std::exception& e) {
        error = e.what();
      }
      for (std::size_t a = 0; a < cfg.eval.alpha_eval.size(); ++a) {
        RegretReport r = base_row(m, cfg.eval.alpha_eval[a]);
        r.runtime_s = runtime;
        if (error.empty()) {
          try {
            const RegretResult s = score(spec, oracles[a], decisions,
                                         risk::RiskLevel(r.alpha_eval), cfg.eval.min_denominator);
            r.regret_pct = s.percent;
            r.mean_abs_regret = s.mean_abs_regret;
            r.min_regret = s.min_regret;
            r.valid = s.valid;
            r.skipped = s.skipped;
            if (s.valid == 0) r.error = "every held-out denominator below threshold";
          } catch (const std::exception& e) {
            r.error = std::string("scoring failed: ") + e.what();
          }
        } else {
          r.error = error;
        }
        result.rows.push_back(r);
      }
    }
  }
  result.summary = summarize(result.rows);
  return result;
}

ExperimentResult run_sweep(const std::vector<ExperimentConfig>& cells, const Progress& progress) {
  std::vector<ExperimentResult> parts(cells.size());
  std::mutex mu;
  parallel_for(cells.size(), [&](std::size_t c) {
    Progress tagged;
    if (progress) {
      tagged = [&, c](const std::string& s) {
        std::lock_guard<std::mutex> lock(mu);
        progress("cell " + std::to_string(c + 1) + "/" + std::to_string(cells.size()) + " " + s);
      };
    }
    parts[c] = run_experiment(cells[c], tagged);
  });
  ExperimentResult all;
  for (ExperimentResult& p : parts)
    all.rows.insert(all.rows.end(), p.rows.begin(), p.rows.end());
  all.summary = summarize(all.rows);
  return all;
}

std::vector<SummaryRow> summarize(const std::vector<RegretReport>& rows) {
  using Key = std::tuple<std::string, int, int, double, double, double>;
  std::map<Key, std::vector<double>> groups;
  std::vector<Key> order;
  std::map<Key, const RegretReport*> first;
  for (const RegretReport& r : rows) {
    const Key key{r.model, static_cast<int>(r.family), r.deg, r.sigma, r.alpha_train, r.alpha_eval};
    if (!groups.count(key)) {
      order.push_back(key);
      first[key] = &r;
    }
    auto& g = groups[key];
    if (std::isfinite(r.regret_pct)) g.push_back(r.regret_pct);
  }
  std::vector<SummaryRow> out;
  for (const Key& key : order) {
    const auto& v = groups[key];
    const RegretReport& r = *first[key];
    SummaryRow s;
    s.model = r.model;
    s.family = r.family;
    s.deg = r.deg;
    s.sigma = r.sigma;
    s.alpha_train = r.alpha_train;
    s.alpha_eval = r.alpha_eval;
    s.seeds = v.size();
    if (v.empty()) {
      s.mean_pct = kNaN;
      s.se_pct = kNaN;
    } else {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      s.mean_pct = mean;
      s.se_pct = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) /
                                    std::sqrt(static_cast<double>(v.size()))
                              : 0.0;
    }
    out.push_back(s);
  }
  return out;
}

// ---- CSV -----------------------------------------------------------------------------------

const char* const kReportHeader =
    "model,family,deg,sigma,alpha_train,alpha_eval,seed,regret_pct,runtime_s";

std::string report_csv_body(const std::vector<RegretReport>& rows) {
  std::string out = std::string(kReportHeader) + "\n";
  for (const RegretReport& r : rows) {
    out += csv_field(r.model) + ',' + problems::family_name(r.family) + ',' +
           std::to_string(r.deg) + ',' + fmt("%.17g", r.sigma) + ',' +
           fmt("%.17g", r.alpha_train) + ',' + fmt("%.17g", r.alpha_eval) + ',' +
           std::to_string(r.seed) + ',' + fmt("%.17g", r.regret_pct) + ',' +
           fmt("%.3f", r.runtime_s) + '\n';
  }
  return out;
}

void write_report_csv(const std::string& path, const std::vector<RegretReport>& rows,
                      const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  std::string c = comment;
  std::replace(c.begin(), c.end(), '\n', ' ');
  out << "# " << c << '\n' << report_csv_body(rows);
  if (!out) throw Error("write to '" + path + "' failed");
}

std::vector<RegretReport> read_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  std::vector<RegretReport> rows;
  auto bad = [&](const std::string& why) {
    throw SchemaError(path + ":" + std::to_string(line_no) + ": " + why);
  };
  auto real = [&](const std::string& s, const char* field) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0') bad(std::string("malformed ") + field + " '" + s + "'");
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != kReportHeader) bad(std::string("expected header '") + kReportHeader + "'");
      header = true;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 9) bad("expected 9 fields, got " + std::to_string(f.size()));
    RegretReport r;
    r.model = f[0];
    try {
      r.family = problems::parse_family(f[1]);
    } catch (const ConfigError&) {
      bad("unknown family '" + f[1] + "'");
    }
    r.deg = static_cast<int>(real(f[2], "deg"));
    r.sigma = real(f[3], "sigma");
    r.alpha_train = real(f[4], "alpha_train");
    r.alpha_eval = real(f[5], "alpha_eval");
    r.seed = static_cast<std::uint64_t>(real(f[6], "seed"));
    r.regret_pct = real(f[7], "regret_pct");
    r.runtime_s = real(f[8], "runtime_s");
    rows.push_back(r);
  }
  if (!header) throw SchemaError(path + ": missing header '" + std::string(kReportHeader) + "'");
  return rows;
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << "model,family,deg,sigma,alpha_train,alpha_eval,seeds,mean_regret_pct,se_regret_pct\n";
  for (const SummaryRow& s : rows) {
    out << csv_field(s.model) << ',' << problems::family_name(s.family) << ',' << s.deg << ','
        << fmt("%.17g", s.sigma) << ',' << fmt("%.17g", s.alpha_train) << ','
        << fmt("%.17g", s.alpha_eval) << ',' << s.seeds << ',' << fmt("%.17g", s.mean_pct)
        << ',' << fmt("%.17g", s.se_pct) << '\n';
  }
  if (!out) throw Error("write to '" + path + "' failed");
}

// ---- sweeps -------------------------------------------------------------------------------

SweepGrid parse_sweep(const std::string& json_text) {
  const json root = parse_json(json_text);
  SweepGrid g;
  if (!root.is_object() || !root.contains("sweep")) return g;
  const json& s = root["sweep"];
  check_keys(s, "sweep", {"beta", "alpha", "sigma", "deg", "d", "n", "k"});
  g.beta = read_list<double>(s, "sweep", "beta");
  g.alpha = read_list<double>(s, "sweep", "alpha");
  g.sigma = read_list<double>(s, "sweep", "sigma");
  g.k = read_list<double>(s, "sweep", "k");
  g.deg = read_list<int>(s, "sweep", "deg");
  g.d = read_list<int>(s, "sweep", "d");
  g.n = read_list<int>(s, "sweep", "n");
  for (double a : g.alpha) risk::RiskLevel check(a);
  for (double b : g.beta)
    if (!(b >= 0.0)) throw ConfigError("sweep.beta entries must be >= 0");
  for (double k : g.k)
    if (!(k >= 1.0)) throw ConfigError("sweep.k entries must be >= 1");
  for (int d : g.d)
    if (d < 1) throw ConfigError("sweep.d entries must be >= 1");
  for (int n : g.n)
    if (n < 2) throw ConfigError("sweep.n entries must be >= 2");
  return g;
}

std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& base, const SweepGrid& grid) {
  std::vector<ExperimentConfig> cells{base};
  auto axis = [&cells](const auto& values, auto apply) {
    if (values.empty()) return;
    std::vector<ExperimentConfig> next;
    for (const ExperimentConfig& c : cells)
      for (const auto& v : values) {
        ExperimentConfig e = c;
        apply(e, v);
        next.push_back(std::move(e));
      }
    cells = std::move(next);
  };
  // Axes that are not CSV columns are appended to the model names
  // ("gendfl/beta=10") so summary cells stay distinct.
  auto tag = [](ExperimentConfig& e, const std::string& label) {
    for (ModelSpec& m : e.models) m.name += "/" + label;
  };
  // alpha moves the training level of every model; evaluation stays on the base grid.
  axis(grid.alpha, [](ExperimentConfig& e, double a) {
    e.train.alpha = a;
    for (ModelSpec& m : e.models) m.alpha_train = a;
  });
  axis(grid.beta, [&](ExperimentConfig& e, double b) {
    e.train.beta = b;
    for (ModelSpec& m : e.models) m.beta = b;
    tag(e, "beta=" + fmt("%g", b));
  });
  axis(grid.k, [&](ExperimentConfig& e, double k) {
    e.train.k = static_cast<std::size_t>(k);
    for (ModelSpec& m : e.models) m.k = static_cast<std::size_t>(k);
    tag(e, "k=" + fmt("%g", k));
  });
  axis(grid.sigma, [](ExperimentConfig& e, double s) { e.gen.sigma = s; });
  axis(grid.deg, [](ExperimentConfig& e, int d) { e.gen.deg = d; });
  axis(grid.d, [&](ExperimentConfig& e, int d) {
    e.gen.d_c = static_cast<std::size_t>(d);
    tag(e, "d=" + std::to_string(d));
  });
  axis(grid.n, [&](ExperimentConfig& e, int n) {
    e.gen.n = static_cast<std::size_t>(n);
    tag(e, "n=" + std::to_string(n));
  });
  for (const ExperimentConfig& c : cells) {
    if (c.family != Family::kEnergy) problems::validate(c.gen);
  }
  return cells;
}

std::string describe(const ExperimentConfig& cfg) {
  std::ostringstream o;
  o << "family=" << problems::family_name(cfg.family);
  if (cfg.family != Family::kEnergy) {
    o << " n=" << cfg.gen.n << " d_x=" << cfg.gen.d_x << " d_c=" << cfg.gen.d_c
      << " deg=" << cfg.gen.deg << " sigma=" << fmt("%g", cfg.gen.sigma);
  }
  o << " models=";
  for (std::size_t i = 0; i < cfg.models.size(); ++i) {
    const ModelSpec& m = cfg.models[i];
    o << (i ? "," : "") << m.name << "(alpha_train=" << fmt("%g", model_alpha(m, cfg.train));
    if (m.kind == ModelKind::kGenDfl) {
      o << " beta=" << fmt("%g", m.beta.value_or(cfg.train.beta))
        << " k=" << m.k.value_or(cfg.train.k);
    }
    o << ")";
  }
  o << " alpha_eval=";
  for (std::size_t i = 0; i < cfg.eval.alpha_eval.size(); ++i)
    o << (i ? "," : "") << fmt("%g", cfg.eval.alpha_eval[i]);
  o << " seeds=" << cfg.eval.seeds.size() << " m=" << cfg.eval.m
    << " holdout=" << cfg.eval.holdout;
  return o.str();
}

}  // namespace gendfl::eval
