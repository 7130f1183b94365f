#pragma once

#include "fastl1/dictionary.hpp"
#include "fastl1/fastl1.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fastl1 {

// Full description of a synthetic experiment. Loadable from a flat JSON
// file; CLI flags override file values.
struct ExperimentConfig {
  Index n = 100;
  Index k = 400;
  Scenario scenario = Scenario::moderate;
  std::vector<double> lambda_ratios;  // explicit grid; wins over lambda_grid
  int lambda_grid = 0;                // log-spaced count over [1e-2, 1]
  double tol = 1e-5;
  std::optional<double> gamma;  // default: per-scenario preset
  SolverKind solver = SolverKind::fista;
  RuleKind rule = RuleKind::gap_safe;
  std::vector<int> ranks = {5, 10, 15, 20};
  double bernoulli_p = 0.02;
  int trials = 1;
  std::uint64_t seed = 0;
  std::string out = "out";
  int screen_interval = 1;
  bool precompute_aty = false;
  int jobs = 1;
  std::uint64_t max_iter = 1'000'000;
  bool use_gram = true;  // Gram-backed exact phase in sweeps
  std::optional<std::vector<double>> rc_override;  // measured-RC calibration values

  void validate() const;  // throws std::invalid_argument
  std::vector<double> resolved_lambda_ratios() const;
  double resolved_gamma() const;
};

// Per-scenario switching-threshold presets (hard/moderate/easy).
double default_gamma(Scenario s);

ExperimentConfig load_config_json(const std::string& path);

struct Problem {
  DenseDictionary dict;
  Vector y;       // unit l2 norm
  Vector x_true;  // Bernoulli-Gaussian, scaled so y = A x_true
};

// Deterministic in (config.seed, trial). The dictionary depends on the seed
// only; the signal is redrawn per trial. Draws with an empty support are
// rejected and resampled.
Problem generate_problem(const ExperimentConfig& config, int trial);

// Signal draw alone, for callers that hold a prebuilt dictionary.
void draw_signal(const DenseDictionary& dict, double bernoulli_p, std::uint64_t seed,
                 int trial, Vector& y, Vector& x_true);

struct RunRecord {
  int run_id = 0;
  int trial = 0;
  double lambda_ratio = 0.0;
  Variant variant = Variant::plain;
  std::uint64_t iterations = 0;
  std::uint64_t flops = 0;
  double wall_ms = 0.0;
  bool converged = true;
  double final_gap = 0.0;
  std::vector<TraceRow> trace;
};

struct SweepSummaryRow {
  int trial = 0;
  double lambda_ratio = 0.0;
  std::uint64_t flops_plain = 0, flops_screened = 0, flops_multi = 0;
  double time_plain = 0.0, time_screened = 0.0, time_multi = 0.0;
  std::uint64_t iters_plain = 0, iters_screened = 0, iters_multi = 0;
  bool capped = false;  // some variant hit the iteration cap
};

struct SweepOutput {
  std::vector<RunRecord> runs;
  std::vector<SweepSummaryRow> summary;
  bool any_capped = false;
  double build_ms = 0.0;  // approximation-sequence build time (reported separately)
};

// Runs plain / screened / multi-dictionary solves over the lambda grid and
// trials, writes trace.csv, summary.csv and percentiles.csv under
// config.out (empty out path skips writing).
SweepOutput run_sweep(const ExperimentConfig& config);

// Single (lambda, trial, variant) run, sharing the sweep plumbing.
RunRecord run_single(const ExperimentConfig& config, double lambda_ratio, int trial,
                     Variant variant);

void write_trace_csv(const std::string& path, const std::vector<RunRecord>& runs);
void write_summary_csv(const std::string& path, const std::vector<SweepSummaryRow>& rows);
void write_percentiles_csv(const std::string& path, const std::vector<SweepSummaryRow>& rows);

// Linear-interpolation percentile of a sample (q in [0, 1]).
double percentile(std::vector<double> values, double q);

// Post-processes a trace.csv into plot-ready tidy files (gap_iter.csv,
// gap_time.csv, flops_iter.csv, active_iter.csv) under out_dir; sentinel
// gap rows are skipped in gap files.
void emit_plot_data(const std::string& trace_csv, const std::string& out_dir);

}  // namespace fastl1
