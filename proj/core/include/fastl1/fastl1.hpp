#pragma once

#include "fastl1/dictionary.hpp"
#include "fastl1/screening.hpp"
#include "fastl1/solver.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace fastl1 {

enum class SolverKind { ista, fista };
enum class RuleKind { dynamic_safe, gap_safe };
// plain: no screening. screened: dynamic screening on the exact dictionary.
// multi_dict: full switching run over the approximation sequence.
enum class Variant { plain, screened, multi_dict };

SolverKind solver_from_string(const std::string& s);
RuleKind rule_from_string(const std::string& s);
std::string to_string(SolverKind s);
std::string to_string(RuleKind r);

struct SwitchConfig {
  double gamma_threshold = 0.5;  // in (0, 1)
  int screening_interval = 1;
  double tolerance = 1e-6;  // target duality gap on the exact problem
  std::uint64_t max_iterations = 1'000'000;
  bool precompute_aty = false;  // Table-variant of the stable dynamic test
};

// Saturation ratio of the two computable gaps. Clamped to [0, 1]; a
// vanishing denominator reports 0 (fully saturated, forces a switch).
double gap_ratio(double gap_tilde, double gap_prime);

// Speed criterion first (straight to the exact dictionary), then the
// convergence criterion (next approximation). Keeps the exact dictionary
// once reached.
int switch_dictionary(int i, int last, double gamma, double gamma_threshold,
                      std::int64_t lookahead, double rc_i, std::int64_t total_atoms);

struct TraceRow {
  std::uint64_t iter = 0;
  int dict_index = 0;
  int active_size = 0;  // preserved-set size used by this iteration
  double gap = -1.0;    // exact phase only; -1 otherwise
  double gamma = -1.0;  // approximate phase only; -1 otherwise
  std::uint64_t flops_cum = 0;
  double wall_ms = 0.0;
  int x_nnz = 0;  // exact nonzeros of the iterate after this iteration
};

struct SwitchEvent {
  std::uint64_t iter = 0;
  int from = 0;
  int to = 0;
  bool speed = false;  // true: speed criterion; false: convergence criterion
};

struct SolveResult {
  Vector x;  // full length, zero over screened indices
  bool converged = false;
  double final_gap = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t iterations = 0;
  std::uint64_t total_flops = 0;
  std::vector<TraceRow> trace;
  std::vector<SwitchEvent> switches;
  std::vector<int> final_active;
  bool gap_warning = false;  // a gap fell below the roundoff floor
};

// Fired at every screening instant; vectors use global column indices.
struct ScreeningEvent {
  std::uint64_t iter = 0;
  int dict_index = 0;
  const SafeSphere* sphere = nullptr;
  const std::vector<int>* active_before = nullptr;
  const std::vector<int>* kept = nullptr;
  const DualPoints* duals = nullptr;
  const ApproxDictionary* dict = nullptr;
};
using ScreenObserver = std::function<void(const ScreeningEvent&)>;

struct RunOptions {
  SolverKind solver = SolverKind::fista;
  RuleKind rule = RuleKind::gap_safe;
  Variant variant = Variant::multi_dict;
  // Optional K x K Gram of the exact dictionary; avoids dense matvecs in
  // the exact phase. Ignored while an observer is attached.
  const Matrix* exact_gram = nullptr;
  // Optional per-level Lipschitz cache for the unrestricted dictionaries.
  const std::vector<double>* full_lipschitz = nullptr;
  bool collect_trace = true;
  ScreenObserver observer;
};

// One solver run: proximal iterations, dynamic (stable) screening, and the
// switching rules over the approximation sequence. Non-convergence within
// max_iterations returns converged = false carrying the best iterate.
SolveResult run_lasso(const ApproxSequence& seq, const Vector& y, double lambda,
                      const SwitchConfig& cfg, const RunOptions& opts);

inline SolveResult fastl1_solve(const ApproxSequence& seq, const Vector& y, double lambda,
                                const SwitchConfig& cfg, SolverKind solver, RuleKind rule) {
  RunOptions opts;
  opts.solver = solver;
  opts.rule = rule;
  opts.variant = Variant::multi_dict;
  return run_lasso(seq, y, lambda, cfg, opts);
}

// Per-iteration complexity model. nnz is the iterate's exact nonzero count,
// active the preserved-set size, matvec the structured product cost.
std::uint64_t flops_plain(std::uint64_t k, std::uint64_t n, std::uint64_t nnz);
std::uint64_t flops_screened(std::uint64_t active, std::uint64_t n, std::uint64_t nnz);
std::uint64_t flops_stable(std::uint64_t matvec, std::uint64_t n, std::uint64_t active,
                           std::uint64_t nnz);

// Re-derives the cumulative flop totals from trace rows alone; used to audit
// the ledger. When rows_match is nonnull it reports whether every per-row
// cumulative sum agreed as well.
std::uint64_t recompute_flops(const std::vector<TraceRow>& trace, const ApproxSequence& seq,
                              Variant variant, Index n, Index k,
                              bool* rows_match = nullptr);

}  // namespace fastl1
