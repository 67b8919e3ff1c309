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

#include "gendfl/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "gendfl/errors.hpp"
#include "gendfl/eval.hpp"
#include "gendfl/flow.hpp"
#include "gendfl/problems.hpp"
#include "gendfl/theory.hpp"
#include "gendfl/train.hpp"

namespace gendfl::cli {

namespace {

using eval::ExperimentConfig;

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string summary_path_for(const std::string& out) {
  const auto dot = out.rfind(".csv");
  if (dot != std::string::npos && dot + 4 == out.size()) return out.substr(0, dot) + "_summary.csv";
  return out + ".summary.csv";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- gen-data ----------------------------------------------------------------------------

struct GenDataArgs {
  std::string family = "portfolio";
  problems::GenConfig gen;
  std::string energy_csv;
  std::size_t days = 400;
  std::string out;
  bool d_c_set = false;
};

void gen_data(const GenDataArgs& a, std::ostream& out) {
  const problems::Family family = problems::parse_family(a.family);
  problems::Generated g;
  if (family == problems::Family::kEnergy) {
    g = a.energy_csv.empty()
            ? problems::energy_instances(problems::synthetic_energy_prices(a.days, a.gen.seed))
            : problems::load_energy_csv(a.energy_csv);
  } else {
    problems::GenConfig gen = a.gen;
    if (family == problems::Family::kShortestPath && !a.d_c_set) gen.d_c = 0;
    g = problems::generate(family, gen);
  }
  problems::write_dataset_csv(a.out, g.data);
  out << "wrote " << g.data.size() << " instances (d_x=" << g.data.x.cols()
      << ", d_c=" << g.data.c.cols() << ") to " << a.out << '\n';
}

// ---- train -------------------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string model;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double alpha = 0.0, beta = 0.0;
  bool alpha_set = false, beta_set = false;
  std::string data;
  std::string proxy_checkpoint;
  std::string log;
  std::string out;
};

void train_model(const TrainArgs& a, std::ostream& out) {
  const ExperimentConfig cfg = eval::load_experiment(a.config);
  const std::uint64_t seed = a.seed_set ? a.seed : cfg.eval.seeds.front();
  eval::SplitData split = eval::make_split(cfg, seed);
  if (!a.data.empty()) {
    problems::Dataset d = problems::read_dataset_csv(a.data);
    if (static_cast<std::size_t>(d.x.cols()) != split.train.spec.d_x ||
        static_cast<std::size_t>(d.c.cols()) != split.train.spec.d_c) {
      throw ConfigError("--data dimensions do not match the configured problem");
    }
    split.train.data.x = d.x;
    split.train.data.c = d.c;
  }
  train::TrainConfig tc = cfg.train;
  tc.seed = seed;
  if (a.alpha_set) tc.alpha = a.alpha;
  if (a.beta_set) tc.beta = a.beta;
  tc.log_path = a.log;
  train::validate(tc);
  const auto& data = split.train.data;
  const auto& spec = split.train.spec;
  const auto t0 = std::chrono::steady_clock::now();
  if (a.model == "proxy") {
    flow::save_checkpoint(a.out, train::fit_nll(data, tc, tc.proxy_epochs, tc.proxy_lr));
  } else if (a.model == "gendfl") {
    const flow::FlowParams q = a.proxy_checkpoint.empty()
                                   ? train::fit_nll(data, tc, tc.proxy_epochs, tc.proxy_lr)
                                   : flow::load_checkpoint(a.proxy_checkpoint);
    const train::ProxyModel proxy = train::build_proxy(q, data, spec, tc);
    flow::save_checkpoint(a.out, train::train_gendfl(data, spec, proxy, tc).theta);
  } else if (a.model == "pto") {
    train::save_mlp(a.out, train::train_pto(data, tc));
  } else {
    train::save_mlp(a.out,
                    train::train_cvar_regressor(data, spec, risk::RiskLevel(tc.alpha), tc));
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out << "trained " << a.model << " on " << data.size() << " instances in " << secs
      << " s; checkpoint " << a.out << '\n';
}

// ---- eval --------------------------------------------------------------------------------

struct EvalArgs {
  std::string config;
  std::string model = "gendfl";
  std::string name;
  std::string checkpoint;
  std::string proxy_checkpoint;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double alpha_train = 0.0;
  bool alpha_train_set = false;
  std::vector<double> alpha_eval;
  std::string out;
};

void eval_model(const EvalArgs& a, std::ostream& out) {
  if (a.checkpoint.empty()) throw ConfigError("missing --model-checkpoint");
  if (a.config.empty()) throw ConfigError("missing --config");
  ExperimentConfig cfg = eval::load_experiment(a.config);
  if (!a.alpha_eval.empty()) cfg.eval.alpha_eval = a.alpha_eval;
  eval::validate(cfg.eval);
  const eval::ModelKind kind = eval::parse_model_kind(a.model);
  const std::uint64_t seed = a.seed_set ? a.seed : cfg.eval.seeds.front();
  const double alpha_train = a.alpha_train_set ? a.alpha_train : cfg.train.alpha;
  risk::RiskLevel check(alpha_train);

  const auto t0 = std::chrono::steady_clock::now();
  const eval::SplitData split = eval::make_split(cfg, seed);
  const auto& spec = split.train.spec;
  std::vector<eval::Vec> decisions;
  auto check_dims = [&](std::size_t d_x, std::size_t d_c) {
    if (d_x != spec.d_x || d_c != spec.d_c) {
      throw SchemaError(a.checkpoint + " has d_x=" + std::to_string(d_x) + ", d_c=" +
                        std::to_string(d_c) + " but the configured problem has d_x=" +
                        std::to_string(spec.d_x) + ", d_c=" + std::to_string(spec.d_c));
    }
  };
  if (kind == eval::ModelKind::kGenDfl) {
    const flow::FlowParams theta = flow::load_checkpoint(a.checkpoint);
    check_dims(theta.cfg.d_x, theta.cfg.d_c);
    decisions = eval::decide_gendfl(theta, spec, split.holdout_x, alpha_train, cfg.train.k, seed,
                                    cfg.train.solver);
  } else {
    const train::PredictorMLP g = train::load_mlp(a.checkpoint);
    check_dims(g.d_x, g.d_c);
    decisions = eval::decide_point(g, spec, split.holdout_x, cfg.train.solver);
  }
  flow::FlowParams q;
  if (cfg.family == problems::Family::kEnergy) {
    if (a.proxy_checkpoint.empty()) {
      throw ConfigError("energy evaluation scores against a proxy; pass --proxy-checkpoint");
    }
    q = flow::load_checkpoint(a.proxy_checkpoint);
  }
  std::vector<eval::RegretReport> rows;
  for (double ae : cfg.eval.alpha_eval) {
    const auto cases = eval::experiment_oracle(cfg, split, seed, ae, &q);
    const eval::RegretResult s =
        eval::score(spec, cases, decisions, risk::RiskLevel(ae), cfg.eval.min_denominator);
    eval::RegretReport r;
    r.model = a.name.empty() ? a.model : a.name;
    r.family = cfg.family;
    r.deg = cfg.family == problems::Family::kEnergy ? 0 : cfg.gen.deg;
    r.sigma = cfg.family == problems::Family::kEnergy ? 0.0 : cfg.gen.sigma;
    r.alpha_train = alpha_train;
    r.alpha_eval = ae;
    r.seed = seed;
    r.regret_pct = s.percent;
    r.valid = s.valid;
    r.skipped = s.skipped;
    r.mean_abs_regret = s.mean_abs_regret;
    rows.push_back(r);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (auto& r : rows) r.runtime_s = secs;
  if (a.out.empty()) {
    out << eval::report_csv_body(rows);
  } else {
    eval::write_report_csv(a.out, rows, "generated " + timestamp() + " by gendfl eval");
    out << "wrote " << rows.size() << " rows to " << a.out << '\n';
  }
  for (const auto& r : rows) {
    if (r.skipped > 0) {
      out << "note: alpha_eval=" << r.alpha_eval << " skipped " << r.skipped
          << " held-out instances with |E f(c, w*)| < " << cfg.eval.min_denominator << '\n';
    }
  }
}

// ---- sweep -------------------------------------------------------------------------------

struct SweepArgs {
  std::string config;
  bool dry_run = false;
  bool quiet = false;
  std::string out = "regret.csv";
  std::string summary;
};

int sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  const std::string text = read_file(a.config);
  const ExperimentConfig base = eval::parse_experiment(text);
  const auto cells = eval::expand_sweep(base, eval::parse_sweep(text));
  if (a.dry_run) {
    std::size_t runs = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      out << "cell " << (i + 1) << ": " << eval::describe(cells[i]) << '\n';
      runs += cells[i].models.size() * cells[i].eval.seeds.size();
    }
    out << cells.size() << " cells, " << runs << " training runs planned\n";
    return 0;
  }
  eval::Progress progress;
  if (!a.quiet) progress = [&err](const std::string& s) { err << s << '\n'; };
  const eval::ExperimentResult res = eval::run_sweep(cells, progress);
  eval::write_report_csv(a.out, res.rows, "generated " + timestamp() + " by gendfl sweep");
  const std::string summary = a.summary.empty() ? summary_path_for(a.out) : a.summary;
  eval::write_summary_csv(summary, res.summary);
  std::size_t failed = 0;
  for (const auto& r : res.rows) {
    if (!r.error.empty()) {
      ++failed;
      err << "row " << r.model << " seed " << r.seed << " alpha_eval " << r.alpha_eval << ": "
          << r.error << '\n';
    }
  }
  out << "wrote " << res.rows.size() << " rows to " << a.out << " and " << res.summary.size()
      << " summary rows to " << summary << '\n';
  if (failed > 0) out << failed << " rows recorded a failure (regret nan)\n";
  return 0;
}

// ---- theory -------------------------------------------------------------------------------

int theory_cmd(std::uint64_t seed, std::ostream& out) {
  bool ok = true;
  for (const theory::CheckResult& r : theory::run_suite(seed)) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << " ("
        << r.seconds << " s)\n";
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

// ---- report -------------------------------------------------------------------------------

void report(const std::vector<std::string>& inputs, const std::string& out_path,
            const std::string& gnuplot, std::ostream& out) {
  std::vector<eval::RegretReport> rows;
  for (const std::string& p : inputs) {
    auto r = eval::read_report_csv(p);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  const auto summary = eval::summarize(rows);
  eval::write_summary_csv(out_path, summary);
  out << "summarized " << rows.size() << " rows into " << summary.size() << " cells in "
      << out_path << '\n';
  if (gnuplot.empty()) return;
  std::ofstream g(gnuplot);
  if (!g) throw Error("cannot open '" + gnuplot + "' for writing");
  // One block per model, separated by two blank lines for gnuplot's `index`.
  std::vector<std::string> models;
  for (const auto& s : summary)
    if (std::find(models.begin(), models.end(), s.model) == models.end()) models.push_back(s.model);
  for (std::size_t m = 0; m < models.size(); ++m) {
    if (m) g << "\n\n";
    g << "# model=" << models[m] << "\n# deg sigma alpha_train alpha_eval seeds mean_pct se_pct\n";
    for (const auto& s : summary) {
      if (s.model != models[m]) continue;
      g << s.deg << ' ' << s.sigma << ' ' << s.alpha_train << ' ' << s.alpha_eval << ' '
        << s.seeds << ' ' << s.mean_pct << ' ' << s.se_pct << '\n';
    }
  }
  out << "wrote gnuplot columns to " << gnuplot << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"gendfl: generative decision-focused learning under tail risk"};
  app.require_subcommand(1);

  GenDataArgs gd;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic or energy dataset CSV");
  gen_cmd->add_option("--family", gd.family, "portfolio | knapsack | shortest_path | energy");
  gen_cmd->add_option("--n", gd.gen.n, "Instances");
  gen_cmd->add_option("--d-x", gd.gen.d_x, "Feature dimension");
  auto* d_c_opt = gen_cmd->add_option("--d-c", gd.gen.d_c, "Cost dimension (shortest path: from the grid)");
  gen_cmd->add_option("--deg", gd.gen.deg, "Polynomial degree");
  gen_cmd->add_option("--sigma", gd.gen.sigma, "Noise level");
  gen_cmd->add_option("--seed", gd.gen.seed, "Generator seed");
  gen_cmd->add_option("--energy-csv", gd.energy_csv, "Price file (day_id,slot,price)")
      ->check(CLI::ExistingFile);
  gen_cmd->add_option("--days", gd.days, "Synthetic energy days");
  gen_cmd->add_option("--out", gd.out, "Output dataset CSV")->required();

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train one model and write its checkpoint");
  train_cmd->add_option("--config", ta.config, "Experiment JSON")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--model", ta.model, "proxy | gendfl | pto | cvar-reg")
      ->required()
      ->check(CLI::IsMember({"proxy", "gendfl", "pto", "cvar-reg"}));
  auto* seed_opt = train_cmd->add_option("--seed", ta.seed, "Seed (default: first config seed)");
  auto* alpha_opt = train_cmd->add_option("--alpha", ta.alpha, "Training risk level");
  auto* beta_opt = train_cmd->add_option("--beta", ta.beta, "Regret weight");
  train_cmd->add_option("--data", ta.data, "Dataset CSV replacing the generated training rows")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--proxy-checkpoint", ta.proxy_checkpoint, "Fitted proxy for gendfl")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--log", ta.log, "JSON-lines training log");
  train_cmd->add_option("--out", ta.out, "Checkpoint path")->required();

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint and write RegretReport rows");
  eval_cmd->add_option("--config", ea.config, "Experiment JSON")->check(CLI::ExistingFile);
  eval_cmd->add_option("--model", ea.model, "gendfl | pto | cvar-reg")
      ->check(CLI::IsMember({"gendfl", "pto", "cvar-reg"}));
  eval_cmd->add_option("--name", ea.name, "Model name in the report");
  eval_cmd->add_option("--model-checkpoint", ea.checkpoint, "Checkpoint from `train`")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--proxy-checkpoint", ea.proxy_checkpoint, "Proxy flow (energy)")
      ->check(CLI::ExistingFile);
  auto* eval_seed_opt = eval_cmd->add_option("--seed", ea.seed, "Seed (default: first config seed)");
  auto* eval_alpha_opt = eval_cmd->add_option("--alpha-train", ea.alpha_train,
                                              "Risk level of the model's decisions");
  eval_cmd->add_option("--alpha-eval", ea.alpha_eval, "Evaluation risk levels");
  eval_cmd->add_option("--out", ea.out, "Report CSV (default: stdout)");

  SweepArgs sa;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run every cell of a config's grid");
  sweep_cmd->add_option("--config", sa.config, "Experiment JSON with an optional sweep section")
      ->required()
      ->check(CLI::ExistingFile);
  sweep_cmd->add_flag("--dry-run", sa.dry_run, "Print the planned grid and exit");
  sweep_cmd->add_flag("--quiet", sa.quiet, "No progress lines");
  sweep_cmd->add_option("--out", sa.out, "Report CSV");
  sweep_cmd->add_option("--summary", sa.summary, "Summary CSV (default: <out>_summary.csv)");

  std::uint64_t theory_seed = 0;
  auto* theory_sub = app.add_subcommand("theory", "Run the risk-measure check suite");
  theory_sub->add_option("--seed", theory_seed, "Seed");

  std::vector<std::string> inputs;
  std::string report_out, gnuplot;
  auto* report_cmd = app.add_subcommand("report", "Aggregate report CSVs into a summary");
  report_cmd->add_option("inputs", inputs, "Report CSVs")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--out", report_out, "Summary CSV")->required();
  report_cmd->add_option("--gnuplot", gnuplot, "Whitespace columns for gnuplot");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    err << "gendfl: error: " << msg << " (see --help)\n";
    return 2;
  }

  try {
    if (*gen_cmd) {
      gd.d_c_set = d_c_opt->count() > 0;
      gen_data(gd, out);
    } else if (*train_cmd) {
      ta.seed_set = seed_opt->count() > 0;
      ta.alpha_set = alpha_opt->count() > 0;
      ta.beta_set = beta_opt->count() > 0;
      train_model(ta, out);
    } else if (*eval_cmd) {
      ea.seed_set = eval_seed_opt->count() > 0;
      ea.alpha_train_set = eval_alpha_opt->count() > 0;
      eval_model(ea, out);
    } else if (*sweep_cmd) {
      return sweep(sa, out, err);
    } else if (*theory_sub) {
      return theory_cmd(theory_seed, out);
    } else if (*report_cmd) {
      report(inputs, report_out, gnuplot, out);
    }
  } catch (const ConfigError& e) {
    err << "gendfl: config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "gendfl: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace gendfl::cli
