#pragma once

#include "fastl1/dictionary.hpp"
#include "fastl1/solver.hpp"

#include <optional>
#include <vector>

namespace fastl1 {

// A sphere certified to contain the dual optimum of the exact problem.
// Only the l2 norm index is used by this artifact.
struct SafeSphere {
  Vector center;
  double radius = 0.0;
  int norm_index = 2;
};

// ||A^T y||_inf; the smallest lambda for which 0 solves the problem.
double lambda_max(const LinearOp& dict, const Vector& y);

// max_j (|atilde_j^T y| + eps_j ||y||_2) >= lambda_max, computable with the
// approximate dictionary only.
double stable_lambda_max(const ApproxDictionary& dict, const Vector& y);

// Screening tests are upper bounds on sup |a^T theta| over the sphere (and,
// for the stable forms, over a zone containing the true atom). An atom is
// provably inactive when the value is < 1.
double sphere_test(const Vector& atom, const SafeSphere& sphere);
inline double sphere_test(double abs_atom_dot_center, double atom_norm, double radius) {
  return abs_atom_dot_center + radius * atom_norm;
}

// Zone restricted by the known exact atom norm:
// |atilde^T c| + eps ||c||_2 + R ||a||_2.
double stable_zone_test(const Vector& approx_atom, double eps, double exact_atom_norm,
                        const SafeSphere& sphere);
inline double stable_zone_test(double abs_approx_dot_center, double eps, double center_norm,
                               double exact_atom_norm, double radius) {
  return abs_approx_dot_center + eps * center_norm + radius * exact_atom_norm;
}

// Plain ball zone (exact atom norm unavailable):
// |atilde^T c| + eps ||c||_2 + R ||atilde||_2 + R eps.
double stable_ball_test(const Vector& approx_atom, double eps, const SafeSphere& sphere);
inline double stable_ball_test(double abs_approx_dot_center, double eps, double center_norm,
                               double approx_atom_norm, double radius) {
  return abs_approx_dot_center + eps * center_norm + radius * approx_atom_norm + radius * eps;
}

// z / max(1, ||A^T z||_inf), a point in the dual feasible set of A.
Vector dual_scale(const Vector& z, const LinearOp& dict);

// z / max(1, max_j(|atilde_j^T z| + eps_j ||z||_2)), feasible for both the
// exact and the approximate problem.
Vector stable_dual_scale(const Vector& z, const ApproxDictionary& dict);

// Residual-proportional dual points. theta_prime is feasible for both
// problems, theta_tilde for the approximate one only; both are clamped
// projections of y/lambda onto the residual direction, so
// D(theta_tilde) >= D(theta_prime).
struct DualPoints {
  Vector theta_prime;
  Vector theta_tilde;
  double scale_prime = 0.0;  // theta_prime = scale_prime * residual
  double scale_tilde = 0.0;
};

// correlations = Atilde^T residual and eps restricted to the columns in
// play. For a zero residual (exact fit) the points fall back to the scaled
// y/lambda.
DualPoints dual_point_dynamic(const Vector& residual, const Vector& correlations,
                              const Vector& eps, const Vector& y, double lambda,
                              const LinearOp* dict_for_degenerate = nullptr);

enum class Rule {
  static_safe,
  stable_static,
  dynamic_safe,
  stable_dynamic,
  gap_safe,
  stable_gap,
};

// Everything a rule might need; each rule reads its own subset.
struct SphereInputs {
  const Vector* y = nullptr;
  double lambda = 0.0;
  double lambda_max = 0.0;         // static rule
  double stable_lambda_max = 0.0;  // stable static rule
  const Vector* theta = nullptr;   // dynamic / GAP center or feasible point
  double gap = 0.0;                // GAP rules: G(x, theta | current dict)
  double delta = 0.0;              // stable GAP margin, 0 when exact
};

// Sphere margin for the stable GAP rule with l1-weighted operator error:
// ||y - Atilde x||_2 * E * ||x||_1 + 0.5 * E^2 * ||x||_1^2.
double stable_gap_delta(double residual_norm, double operator_error_bound, double x_l1);

SafeSphere build_sphere(Rule rule, const SphereInputs& in);

struct ScreenResult {
  std::vector<int> kept;    // positions into the tested index range
  int lookahead_count = 0;  // conventional test on the approximate atoms
};

// Hot-path form on precomputed |atom^T center| values. Stable zone test
// decides kept (value >= 1 preserves); the lookahead count drops the error
// margins and uses the approximate atom norms, reusing the same dots.
ScreenResult screen_precomputed(const Vector& abs_atom_dot_center, const Vector& eps,
                                const Vector& exact_norms, const Vector& approx_norms,
                                double center_norm, double radius);

// Convenience form that computes the inner products through the operator.
// active indexes columns of dict; returns the kept subset of active.
std::vector<int> screen(const std::vector<int>& active, const SafeSphere& sphere,
                        const ApproxDictionary& dict, bool use_stable);

}  // namespace fastl1
