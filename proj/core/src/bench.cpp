#include "fastl1/bench.hpp"

#include "fastl1/screening.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace fastl1 {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_ms(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::plain: return "plain";
    case Variant::screened: return "screened";
    case Variant::multi_dict: return "fastl1";
  }
  return "?";
}

std::uint64_t mix_seed(std::uint64_t seed, int trial) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(trial) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

double default_gamma(Scenario s) {
  switch (s) {
    case Scenario::hard: return 0.5;
    case Scenario::moderate: return 0.25;
    case Scenario::easy: return 0.2;
  }
  return 0.5;
}

void ExperimentConfig::validate() const {
  if (n < 1 || k < 1) throw std::invalid_argument("n and k must be positive");
  if (tol <= 0) throw std::invalid_argument("tol must be positive");
  if (gamma && (*gamma <= 0.0 || *gamma >= 1.0)) {
    throw std::invalid_argument("gamma must lie in (0, 1)");
  }
  if (bernoulli_p <= 0.0 || bernoulli_p > 1.0) {
    throw std::invalid_argument("bernoulli-p must lie in (0, 1]");
  }
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  if (screen_interval < 1) throw std::invalid_argument("screen-interval must be >= 1");
  if (lambda_ratios.empty() && lambda_grid < 1) {
    throw std::invalid_argument("need --lambda-ratio or --lambda-grid");
  }
  for (double r : lambda_ratios) {
    if (r <= 0.0 || r > 1.0) throw std::invalid_argument("lambda ratios must lie in (0, 1]");
  }
  if (ranks.empty()) throw std::invalid_argument("need at least one rank");
  if (rc_override && rc_override->size() != ranks.size()) {
    throw std::invalid_argument("rc-override must list one value per rank");
  }
}

std::vector<double> ExperimentConfig::resolved_lambda_ratios() const {
  if (!lambda_ratios.empty()) return lambda_ratios;
  std::vector<double> grid;
  const double lo = std::log10(1e-2);
  const double hi = std::log10(1.0);
  if (lambda_grid == 1) {
    grid.push_back(1e-1);
    return grid;
  }
  for (int i = 0; i < lambda_grid; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(lambda_grid - 1);
    grid.push_back(std::pow(10.0, lo + f * (hi - lo)));
  }
  grid.back() = 1.0;
  return grid;
}

double ExperimentConfig::resolved_gamma() const {
  return gamma ? *gamma : default_gamma(scenario);
}

ExperimentConfig load_config_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("bad config JSON: ") + e.what());
  }
  ExperimentConfig c;
  if (j.contains("n")) c.n = j["n"].get<Index>();
  if (j.contains("k")) c.k = j["k"].get<Index>();
  if (j.contains("scenario")) c.scenario = scenario_from_string(j["scenario"].get<std::string>());
  if (j.contains("lambda_ratio")) c.lambda_ratios = {j["lambda_ratio"].get<double>()};
  if (j.contains("lambda_ratios")) c.lambda_ratios = j["lambda_ratios"].get<std::vector<double>>();
  if (j.contains("lambda_grid")) c.lambda_grid = j["lambda_grid"].get<int>();
  if (j.contains("tol")) c.tol = j["tol"].get<double>();
  if (j.contains("gamma")) c.gamma = j["gamma"].get<double>();
  if (j.contains("solver")) c.solver = solver_from_string(j["solver"].get<std::string>());
  if (j.contains("rule")) c.rule = rule_from_string(j["rule"].get<std::string>());
  if (j.contains("ranks")) c.ranks = j["ranks"].get<std::vector<int>>();
  if (j.contains("bernoulli_p")) c.bernoulli_p = j["bernoulli_p"].get<double>();
  if (j.contains("trials")) c.trials = j["trials"].get<int>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("out")) c.out = j["out"].get<std::string>();
  if (j.contains("screen_interval")) c.screen_interval = j["screen_interval"].get<int>();
  if (j.contains("precompute_aty")) c.precompute_aty = j["precompute_aty"].get<bool>();
  if (j.contains("jobs")) c.jobs = j["jobs"].get<int>();
  if (j.contains("max_iter")) c.max_iter = j["max_iter"].get<std::uint64_t>();
  if (j.contains("use_gram")) c.use_gram = j["use_gram"].get<bool>();
  if (j.contains("rc_override")) c.rc_override = j["rc_override"].get<std::vector<double>>();
  return c;
}

void draw_signal(const DenseDictionary& dict, double bernoulli_p, std::uint64_t seed,
                 int trial, Vector& y, Vector& x_true) {
  std::mt19937_64 rng(mix_seed(seed, trial));
  std::bernoulli_distribution coin(bernoulli_p);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Index k = dict.cols();
  x_true = Vector::Zero(k);
  for (int attempt = 0;; ++attempt) {
    if (attempt > 100000) throw std::runtime_error("signal draw kept failing");
    x_true.setZero();
    bool any = false;
    for (Index j = 0; j < k; ++j) {
      if (coin(rng)) {
        x_true(j) = gauss(rng);
        any = true;
      }
    }
    if (!any) continue;
    y = dict.apply(x_true);
    const double norm = y.norm();
    if (norm <= 1e-12) continue;
    x_true /= norm;
    y /= norm;
    return;
  }
}

Problem generate_problem(const ExperimentConfig& config, int trial) {
  Problem p{synthesize_scenario(config.n, config.k, config.scenario, config.seed), {}, {}};
  draw_signal(p.dict, config.bernoulli_p, config.seed, trial, p.y, p.x_true);
  return p;
}

namespace {

struct SweepContext {
  ApproxSequence seq;
  std::vector<double> full_lipschitz;
  Matrix gram;
  bool has_gram = false;
};

SweepContext build_context(const ExperimentConfig& config, const DenseDictionary& dict) {
  SweepContext ctx;
  ctx.seq = build_sukro_sequence(dict, config.ranks);
  if (config.rc_override) {
    for (size_t i = 0; i < config.rc_override->size(); ++i) {
      ctx.seq.dicts[i].relative_complexity = (*config.rc_override)[i];
    }
    ctx.seq.validate();
  }
  for (const ApproxDictionary& d : ctx.seq.dicts) {
    ctx.full_lipschitz.push_back(lipschitz_bound(*d.op));
  }
  if (config.use_gram) {
    const Matrix& a = dict.entries();
    ctx.gram.resize(a.cols(), a.cols());
    ctx.gram.setZero();
    ctx.gram.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
    ctx.gram.triangularView<Eigen::StrictlyUpper>() = ctx.gram.transpose();
    ctx.has_gram = true;
  }
  return ctx;
}

RunRecord execute_run(const ExperimentConfig& config, const SweepContext& ctx,
                      const Vector& y, double lambda_ratio, int trial, Variant variant,
                      int run_id) {
  const double lmax = lambda_max(*ctx.seq.exact().op, y);
  SwitchConfig sw;
  sw.gamma_threshold = config.resolved_gamma();
  sw.screening_interval = config.screen_interval;
  sw.tolerance = config.tol;
  sw.max_iterations = config.max_iter;
  sw.precompute_aty = config.precompute_aty;

  RunOptions opts;
  opts.solver = config.solver;
  opts.rule = config.rule;
  opts.variant = variant;
  opts.full_lipschitz = &ctx.full_lipschitz;
  if (ctx.has_gram) opts.exact_gram = &ctx.gram;

  SolveResult res = run_lasso(ctx.seq, y, lambda_ratio * lmax, sw, opts);

  RunRecord rec;
  rec.run_id = run_id;
  rec.trial = trial;
  rec.lambda_ratio = lambda_ratio;
  rec.variant = variant;
  rec.iterations = res.iterations == 0 ? static_cast<std::uint64_t>(res.trace.size())
                                       : res.iterations;
  rec.flops = res.total_flops;
  rec.wall_ms = res.trace.empty() ? 0.0 : res.trace.back().wall_ms;
  rec.converged = res.converged;
  rec.final_gap = res.final_gap;
  rec.trace = std::move(res.trace);
  return rec;
}

}  // namespace

RunRecord run_single(const ExperimentConfig& config, double lambda_ratio, int trial,
                     Variant variant) {
  config.validate();
  const DenseDictionary dict =
      synthesize_scenario(config.n, config.k, config.scenario, config.seed);
  SweepContext ctx = build_context(config, dict);
  Vector y, x_true;
  draw_signal(dict, config.bernoulli_p, config.seed, trial, y, x_true);
  return execute_run(config, ctx, y, lambda_ratio, trial, variant, 0);
}

SweepOutput run_sweep(const ExperimentConfig& config) {
  config.validate();
  const std::vector<double> ratios = config.resolved_lambda_ratios();

  const auto t0 = std::chrono::steady_clock::now();
  const DenseDictionary dict =
      synthesize_scenario(config.n, config.k, config.scenario, config.seed);
  SweepContext ctx = build_context(config, dict);
  SweepOutput out;
  out.build_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  struct Task {
    double ratio;
    int trial;
    Variant variant;
    int run_id;
  };
  std::vector<Task> tasks;
  const Variant variants[] = {Variant::plain, Variant::screened, Variant::multi_dict};
  int run_id = 0;
  for (double ratio : ratios) {
    for (int trial = 0; trial < config.trials; ++trial) {
      for (Variant v : variants) tasks.push_back({ratio, trial, v, run_id++});
    }
  }

  out.runs.resize(tasks.size());
  std::atomic<size_t> cursor{0};
  auto worker = [&]() {
    for (;;) {
      const size_t idx = cursor.fetch_add(1);
      if (idx >= tasks.size()) return;
      const Task& task = tasks[idx];
      Vector y, x_true;
      draw_signal(dict, config.bernoulli_p, config.seed, task.trial, y, x_true);
      out.runs[idx] =
          execute_run(config, ctx, y, task.ratio, task.trial, task.variant, task.run_id);
    }
  };
  if (config.jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < config.jobs; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  // One summary row per (lambda, trial) covering the three variants.
  for (size_t base = 0; base + 2 < out.runs.size(); base += 3) {
    SweepSummaryRow row;
    row.trial = out.runs[base].trial;
    row.lambda_ratio = out.runs[base].lambda_ratio;
    for (size_t off = 0; off < 3; ++off) {
      const RunRecord& r = out.runs[base + off];
      row.capped = row.capped || !r.converged;
      switch (r.variant) {
        case Variant::plain:
          row.flops_plain = r.flops;
          row.time_plain = r.wall_ms;
          row.iters_plain = r.iterations;
          break;
        case Variant::screened:
          row.flops_screened = r.flops;
          row.time_screened = r.wall_ms;
          row.iters_screened = r.iterations;
          break;
        case Variant::multi_dict:
          row.flops_multi = r.flops;
          row.time_multi = r.wall_ms;
          row.iters_multi = r.iterations;
          break;
      }
    }
    out.any_capped = out.any_capped || row.capped;
    out.summary.push_back(row);
  }

  if (!config.out.empty()) {
    std::filesystem::create_directories(config.out);
    write_trace_csv(config.out + "/trace.csv", out.runs);
    write_summary_csv(config.out + "/summary.csv", out.summary);
    write_percentiles_csv(config.out + "/percentiles.csv", out.summary);
  }
  return out;
}

void write_trace_csv(const std::string& path, const std::vector<RunRecord>& runs) {
  std::ofstream f(path);
  if (!f) throw std::invalid_argument("cannot open " + path + " for writing");
  f << "run_id,trial,lambda_ratio,variant,iter,dict_index,active_size,gap,gamma,"
       "flops_cum,wall_ms,x_nnz\n";
  for (const RunRecord& r : runs) {
    for (const TraceRow& row : r.trace) {
      f << r.run_id << ',' << r.trial << ',' << fmt(r.lambda_ratio) << ','
        << variant_name(r.variant) << ',' << row.iter << ',' << row.dict_index << ','
        << row.active_size << ',' << fmt(row.gap) << ',' << fmt(row.gamma) << ','
        << row.flops_cum << ',' << fmt_ms(row.wall_ms) << ',' << row.x_nnz << '\n';
    }
  }
}

void write_summary_csv(const std::string& path, const std::vector<SweepSummaryRow>& rows) {
  std::ofstream f(path);
  if (!f) throw std::invalid_argument("cannot open " + path + " for writing");
  f << "trial,lambda_ratio,flops_plain,flops_screened,flops_fastl1,"
       "time_plain_ms,time_screened_ms,time_fastl1_ms,"
       "iters_plain,iters_screened,iters_fastl1,"
       "flops_ratio_screened,flops_ratio_fastl1,time_ratio_screened,time_ratio_fastl1,"
       "capped\n";
  for (const SweepSummaryRow& r : rows) {
    const double fr_s = static_cast<double>(r.flops_screened) / static_cast<double>(r.flops_plain);
    const double fr_m = static_cast<double>(r.flops_multi) / static_cast<double>(r.flops_plain);
    const double tr_s = r.time_plain > 0 ? r.time_screened / r.time_plain : 0.0;
    const double tr_m = r.time_plain > 0 ? r.time_multi / r.time_plain : 0.0;
    f << r.trial << ',' << fmt(r.lambda_ratio) << ',' << r.flops_plain << ','
      << r.flops_screened << ',' << r.flops_multi << ',' << fmt_ms(r.time_plain) << ','
      << fmt_ms(r.time_screened) << ',' << fmt_ms(r.time_multi) << ',' << r.iters_plain << ','
      << r.iters_screened << ',' << r.iters_multi << ',' << fmt(fr_s) << ',' << fmt(fr_m) << ','
      << fmt(tr_s) << ',' << fmt(tr_m) << ',' << (r.capped ? 1 : 0) << '\n';
  }
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(h));
  const auto hi = static_cast<size_t>(std::ceil(h));
  const double frac = h - std::floor(h);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

void write_percentiles_csv(const std::string& path, const std::vector<SweepSummaryRow>& rows) {
  std::ofstream f(path);
  if (!f) throw std::invalid_argument("cannot open " + path + " for writing");
  f << "lambda_ratio,metric,p25,median,p75\n";

  std::vector<double> ratios;
  for (const SweepSummaryRow& r : rows) {
    if (std::find(ratios.begin(), ratios.end(), r.lambda_ratio) == ratios.end()) {
      ratios.push_back(r.lambda_ratio);
    }
  }
  const char* metrics[] = {"flops_ratio_screened", "flops_ratio_fastl1", "time_ratio_screened",
                           "time_ratio_fastl1"};
  for (double ratio : ratios) {
    for (const char* metric : metrics) {
      std::vector<double> vals;
      for (const SweepSummaryRow& r : rows) {
        if (r.lambda_ratio != ratio) continue;
        const double fp = static_cast<double>(r.flops_plain);
        if (std::string(metric) == "flops_ratio_screened") {
          vals.push_back(static_cast<double>(r.flops_screened) / fp);
        } else if (std::string(metric) == "flops_ratio_fastl1") {
          vals.push_back(static_cast<double>(r.flops_multi) / fp);
        } else if (std::string(metric) == "time_ratio_screened") {
          vals.push_back(r.time_plain > 0 ? r.time_screened / r.time_plain : 0.0);
        } else {
          vals.push_back(r.time_plain > 0 ? r.time_multi / r.time_plain : 0.0);
        }
      }
      f << fmt(ratio) << ',' << metric << ',' << fmt(percentile(vals, 0.25)) << ','
        << fmt(percentile(vals, 0.5)) << ',' << fmt(percentile(vals, 0.75)) << '\n';
    }
  }
}

void emit_plot_data(const std::string& trace_csv, const std::string& out_dir) {
  std::ifstream in(trace_csv);
  if (!in) throw std::invalid_argument("cannot open " + trace_csv);
  std::filesystem::create_directories(out_dir);
  std::ofstream gap_iter(out_dir + "/gap_iter.csv");
  std::ofstream gap_time(out_dir + "/gap_time.csv");
  std::ofstream flops_iter(out_dir + "/flops_iter.csv");
  std::ofstream active_iter(out_dir + "/active_iter.csv");
  gap_iter << "lambda_ratio,trial,variant,iter,gap\n";
  gap_time << "lambda_ratio,trial,variant,wall_ms,gap\n";
  flops_iter << "lambda_ratio,trial,variant,iter,flops_cum\n";
  active_iter << "lambda_ratio,trial,variant,iter,active_size\n";

  std::string line;
  if (!std::getline(in, line)) return;  // header (empty trace keeps headers only)
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cell;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cell.push_back(c);
    if (cell.size() != 12) throw std::invalid_argument("malformed trace row: " + line);
    const std::string& ratio = cell[2];
    const std::string& trial = cell[1];
    const std::string& variant = cell[3];
    const std::string& iter = cell[4];
    const std::string& gap = cell[7];
    const double gap_v = std::stod(gap);
    if (gap_v >= 0) {
      gap_iter << ratio << ',' << trial << ',' << variant << ',' << iter << ',' << gap << '\n';
      gap_time << ratio << ',' << trial << ',' << variant << ',' << cell[10] << ',' << gap
               << '\n';
    }
    flops_iter << ratio << ',' << trial << ',' << variant << ',' << iter << ',' << cell[9]
               << '\n';
    active_iter << ratio << ',' << trial << ',' << variant << ',' << iter << ',' << cell[6]
                << '\n';
  }
}

}  // namespace fastl1
