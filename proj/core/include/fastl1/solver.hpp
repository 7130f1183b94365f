#pragma once

#include "fastl1/dictionary.hpp"

#include <functional>

namespace fastl1 {

// One l1-regularized least-squares instance:
//   minimize 0.5 ||A x - y||^2 + lambda ||x||_1.
// The dictionary is borrowed, not owned.
struct LassoProblem {
  const LinearOp* dict = nullptr;
  Vector y;
  double lambda = 0.0;
};

// sign(z) * max(|z| - u, 0)
double soft_threshold(double z, double u);
Vector soft_threshold(const Vector& z, double u);

// Gradient step size and momentum state. step_size is 1/L with
// L >= (largest singular value of the current dictionary)^2.
struct SolverAux {
  double step_size = 0.0;
  // FISTA only
  Vector x_prev;
  double t_k = 1.0;
  bool momentum_ready = false;
};

struct StepResult {
  Vector x_next;
  Vector residual;      // y - A g at the gradient point g
  Vector correlations;  // A^T residual, reusable by screening
};

// x_{t+1} = ST_{lambda/L}(x_t + (1/L) A^T (y - A x_t))
StepResult ista_step(const Vector& x, const LassoProblem& problem, const SolverAux& aux);

// ISTA step applied at the extrapolated point; updates the momentum state.
// The first call (no momentum yet) coincides with ista_step.
StepResult fista_step(const Vector& x, const LassoProblem& problem, SolverAux& aux);

double primal_value(const Vector& x, const LassoProblem& problem);
double dual_value(const Vector& theta, const LassoProblem& problem);

// P(x) - D(theta), nonnegative for feasible theta. Values below -1e-10
// set *warn; small negatives are clamped to 0.
double duality_gap(const Vector& x, const Vector& theta, const LassoProblem& problem,
                   bool* warn = nullptr);

inline constexpr double kGapRoundoffFloor = -1e-10;
inline constexpr double kLipschitzSafety = 1.05;

// Power-iteration upper estimate of the squared spectral norm, times a
// 1.05 safety factor. Deterministic. warm_start, when nonnull and correctly
// sized, seeds the iteration (used after active-set restriction).
double lipschitz_bound(const LinearOp& op, const Vector* warm_start = nullptr,
                       Vector* leading_vector = nullptr);

namespace detail {
// Shared power-iteration core so every caller sees the same estimate for
// the same operator.
double power_iteration_sq_norm(const std::function<Vector(const Vector&)>& apply,
                               const std::function<Vector(const Vector&)>& apply_adjoint,
                               Index cols, const Vector* warm_start, Vector* leading_vector);
}  // namespace detail

}  // namespace fastl1
