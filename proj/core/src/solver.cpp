#include "fastl1/solver.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace fastl1 {

double soft_threshold(double z, double u) {
  const double mag = std::abs(z) - u;
  if (mag <= 0.0) return 0.0;
  return z > 0.0 ? mag : -mag;
}

Vector soft_threshold(const Vector& z, double u) {
  Vector out(z.size());
  for (Index i = 0; i < z.size(); ++i) out(i) = soft_threshold(z(i), u);
  return out;
}

StepResult ista_step(const Vector& x, const LassoProblem& problem, const SolverAux& aux) {
  StepResult r;
  r.residual = problem.y - problem.dict->apply(x);
  r.correlations = problem.dict->apply_adjoint(r.residual);
  r.x_next = soft_threshold(Vector(x + aux.step_size * r.correlations),
                            problem.lambda * aux.step_size);
  return r;
}

StepResult fista_step(const Vector& x, const LassoProblem& problem, SolverAux& aux) {
  Vector g = x;
  if (aux.momentum_ready) {
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * aux.t_k * aux.t_k));
    const double momentum = (aux.t_k - 1.0) / t_next;
    g = x + momentum * (x - aux.x_prev);
    aux.t_k = t_next;
  } else {
    aux.t_k = 1.0;
  }

  StepResult r;
  r.residual = problem.y - problem.dict->apply(g);
  r.correlations = problem.dict->apply_adjoint(r.residual);
  r.x_next = soft_threshold(Vector(g + aux.step_size * r.correlations),
                            problem.lambda * aux.step_size);

  aux.x_prev = x;
  aux.momentum_ready = true;
  return r;
}

double primal_value(const Vector& x, const LassoProblem& problem) {
  const Vector resid = problem.dict->apply(x) - problem.y;
  return 0.5 * resid.squaredNorm() + problem.lambda * x.lpNorm<1>();
}

double dual_value(const Vector& theta, const LassoProblem& problem) {
  const double lam = problem.lambda;
  return 0.5 * problem.y.squaredNorm() -
         0.5 * lam * lam * (theta - problem.y / lam).squaredNorm();
}

double duality_gap(const Vector& x, const Vector& theta, const LassoProblem& problem,
                   bool* warn) {
  const double gap = primal_value(x, problem) - dual_value(theta, problem);
  if (warn) *warn = gap < kGapRoundoffFloor;
  return gap < 0.0 ? 0.0 : gap;
}

namespace detail {

double power_iteration_sq_norm(const std::function<Vector(const Vector&)>& apply,
                               const std::function<Vector(const Vector&)>& apply_adjoint,
                               Index cols, const Vector* warm_start, Vector* leading_vector) {
  Vector v(cols);
  const bool warm = warm_start && warm_start->size() == cols && warm_start->norm() > 0;
  if (warm) {
    v = *warm_start;
  } else {
    std::mt19937_64 rng(0x11b5c417ULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Index i = 0; i < cols; ++i) v(i) = gauss(rng);
  }
  v /= v.norm();

  double estimate = 0.0;
  const int max_iter = warm ? 12 : 200;
  const double rel_tol = warm ? 1e-5 : 1e-9;
  const int min_iter = warm ? 2 : 4;
  for (int it = 0; it < max_iter; ++it) {
    Vector w = apply_adjoint(apply(v));
    const double norm = w.norm();
    if (norm == 0.0) {
      estimate = 0.0;
      break;
    }
    const double prev = estimate;
    estimate = v.dot(w);  // Rayleigh quotient for sigma_max^2
    v = w / norm;
    if (it > min_iter && std::abs(estimate - prev) <= rel_tol * estimate) break;
  }
  if (leading_vector) *leading_vector = v;
  return estimate;
}

}  // namespace detail

double lipschitz_bound(const LinearOp& op, const Vector* warm_start, Vector* leading_vector) {
  const double sq = detail::power_iteration_sq_norm(
      [&](const Vector& x) { return op.apply(x); },
      [&](const Vector& r) { return op.apply_adjoint(r); }, op.cols(), warm_start,
      leading_vector);
  return sq * kLipschitzSafety;
}

}  // namespace fastl1
