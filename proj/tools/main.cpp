// Command-line front end: gen / solve / sweep / plotdata.
// Exit codes: 0 success, 2 configuration error, 3 a run hit the iteration cap.

#include "fastl1/bench.hpp"
#include "fastl1/screening.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace fastl1;

struct CliFlags {
  std::string config_path;
  ExperimentConfig cfg;
  // Raw string forms for flags whose presence must override the file.
  std::string scenario, solver, rule;
  double lambda_ratio = -1.0;
  double gamma = -1.0;
};

void add_common_flags(CLI::App* cmd, CliFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file; flags override its values");
  cmd->add_option("--n", f.cfg.n, "signal dimension N");
  cmd->add_option("--k", f.cfg.k, "atom count K");
  cmd->add_option("--scenario", f.scenario, "easy|moderate|hard");
  cmd->add_option("--lambda-ratio", f.lambda_ratio, "single lambda/lambda_max value");
  cmd->add_option("--lambda-grid", f.cfg.lambda_grid,
                  "log-spaced grid size over [1e-2, 1]");
  cmd->add_option("--tol", f.cfg.tol, "target duality gap on the exact problem");
  cmd->add_option("--gamma", f.gamma, "switching threshold (default: scenario preset)");
  cmd->add_option("--solver", f.solver, "ista|fista");
  cmd->add_option("--rule", f.rule, "dynamic|gap");
  cmd->add_option("--ranks", f.cfg.ranks, "Kronecker term counts, strictly increasing");
  cmd->add_option("--bernoulli-p", f.cfg.bernoulli_p, "signal support probability");
  cmd->add_option("--trials", f.cfg.trials, "independent signal draws");
  cmd->add_option("--seed", f.cfg.seed, "RNG seed");
  cmd->add_option("--out", f.cfg.out, "output directory");
  cmd->add_option("--screen-interval", f.cfg.screen_interval, "iterations between screenings");
  cmd->add_flag("--precompute-aty", f.cfg.precompute_aty,
                "dynamic-rule test variant using precomputed exact atom-signal products");
  cmd->add_option("--jobs", f.cfg.jobs, "worker threads for sweeps");
  cmd->add_option("--max-iter", f.cfg.max_iter, "iteration cap per run");
  cmd->add_option("--gram", f.cfg.use_gram, "back the exact phase with a Gram matrix (0/1)");
}

// File values first, then explicit flags on top.
ExperimentConfig merge(const CliFlags& f, const CLI::App* cmd) {
  ExperimentConfig cfg = f.config_path.empty() ? ExperimentConfig{} : load_config_json(f.config_path);
  auto passed = [&](const std::string& name) { return cmd->count(name) > 0; };
  if (passed("--n")) cfg.n = f.cfg.n;
  if (passed("--k")) cfg.k = f.cfg.k;
  if (!f.scenario.empty()) cfg.scenario = scenario_from_string(f.scenario);
  if (f.lambda_ratio > 0) cfg.lambda_ratios = {f.lambda_ratio};
  if (passed("--lambda-grid")) {
    cfg.lambda_grid = f.cfg.lambda_grid;
    if (!passed("--lambda-ratio")) cfg.lambda_ratios.clear();
  }
  if (passed("--tol")) cfg.tol = f.cfg.tol;
  if (f.gamma > 0) cfg.gamma = f.gamma;
  if (!f.solver.empty()) cfg.solver = solver_from_string(f.solver);
  if (!f.rule.empty()) cfg.rule = rule_from_string(f.rule);
  if (passed("--ranks")) cfg.ranks = f.cfg.ranks;
  if (passed("--bernoulli-p")) cfg.bernoulli_p = f.cfg.bernoulli_p;
  if (passed("--trials")) cfg.trials = f.cfg.trials;
  if (passed("--seed")) cfg.seed = f.cfg.seed;
  if (passed("--out")) cfg.out = f.cfg.out;
  if (passed("--screen-interval")) cfg.screen_interval = f.cfg.screen_interval;
  if (passed("--precompute-aty")) cfg.precompute_aty = f.cfg.precompute_aty;
  if (passed("--jobs")) cfg.jobs = f.cfg.jobs;
  if (passed("--max-iter")) cfg.max_iter = f.cfg.max_iter;
  if (passed("--gram")) cfg.use_gram = f.cfg.use_gram;
  return cfg;
}

int cmd_gen(ExperimentConfig cfg, int trial, bool also_csv) {
  // gen has no lambda of its own; satisfy validation with a placeholder
  if (cfg.lambda_ratios.empty() && cfg.lambda_grid < 1) cfg.lambda_grid = 1;
  cfg.validate();
  Problem p = generate_problem(cfg, trial);
  std::filesystem::create_directories(cfg.out);
  p.dict.save_blob(cfg.out + "/dict.bin");
  if (also_csv) p.dict.save_csv(cfg.out + "/dict.csv");
  auto save_vec = [](const std::string& path, const Vector& v) {
    std::ofstream f(path);
    char buf[40];
    for (Index i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", v(i));
      f << buf << '\n';
    }
  };
  save_vec(cfg.out + "/y.csv", p.y);
  save_vec(cfg.out + "/x_true.csv", p.x_true);
  std::cout << "wrote " << cfg.out << "/dict.bin (" << p.dict.rows() << "x" << p.dict.cols()
            << "), y.csv, x_true.csv\n";
  return 0;
}

int cmd_solve(const ExperimentConfig& cfg, const std::string& variant_name, int trial) {
  cfg.validate();
  Variant variant = Variant::multi_dict;
  if (variant_name == "plain") variant = Variant::plain;
  else if (variant_name == "screened") variant = Variant::screened;
  else if (variant_name != "fastl1") throw std::invalid_argument("unknown variant " + variant_name);

  const double ratio = cfg.resolved_lambda_ratios().front();
  RunRecord rec = run_single(cfg, ratio, trial, variant);
  if (!cfg.out.empty()) {
    std::filesystem::create_directories(cfg.out);
    write_trace_csv(cfg.out + "/trace.csv", {rec});
  }
  std::printf("variant=%s lambda_ratio=%g iters=%llu flops=%llu wall_ms=%.1f gap=%.3e%s\n",
              variant_name.c_str(), ratio, static_cast<unsigned long long>(rec.iterations),
              static_cast<unsigned long long>(rec.flops), rec.wall_ms, rec.final_gap,
              rec.converged ? "" : " [iteration cap hit]");
  return rec.converged ? 0 : 3;
}

int cmd_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  SweepOutput out = run_sweep(cfg);
  std::fprintf(stderr, "approximation build: %.1f ms\n", out.build_ms);
  std::printf("%zu runs -> %s/{trace,summary,percentiles}.csv%s\n", out.runs.size(),
              cfg.out.c_str(), out.any_capped ? " [some runs hit the iteration cap]" : "");
  return out.any_capped ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lasso benchmark: structured dictionaries with stable safe screening"};
  app.require_subcommand(1);

  CliFlags gen_flags, solve_flags, sweep_flags;
  int gen_trial = 0, solve_trial = 0;
  bool gen_csv = false;
  std::string solve_variant = "fastl1";
  std::string plot_traces, plot_out = "plots";

  CLI::App* gen = app.add_subcommand("gen", "emit a synthetic problem to disk");
  add_common_flags(gen, gen_flags);
  gen->add_option("--trial", gen_trial, "signal draw index");
  gen->add_flag("--csv", gen_csv, "also write the dictionary as CSV");

  CLI::App* solve = app.add_subcommand("solve", "single run");
  add_common_flags(solve, solve_flags);
  solve->add_option("--trial", solve_trial, "signal draw index");
  solve->add_option("--variant", solve_variant, "plain|screened|fastl1");

  CLI::App* sweep = app.add_subcommand("sweep", "full grid of runs");
  add_common_flags(sweep, sweep_flags);

  CLI::App* plotdata = app.add_subcommand("plotdata", "post-process traces into plot CSVs");
  plotdata->add_option("--traces", plot_traces, "trace.csv path")->required();
  plotdata->add_option("--out", plot_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen(merge(gen_flags, gen), gen_trial, gen_csv);
    if (solve->parsed()) return cmd_solve(merge(solve_flags, solve), solve_variant, solve_trial);
    if (sweep->parsed()) return cmd_sweep(merge(sweep_flags, sweep));
    if (plotdata->parsed()) {
      fastl1::emit_plot_data(plot_traces, plot_out);
      std::cout << "wrote " << plot_out << "/{gap_iter,gap_time,flops_iter,active_iter}.csv\n";
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
