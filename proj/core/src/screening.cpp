#include "fastl1/screening.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fastl1 {

double lambda_max(const LinearOp& dict, const Vector& y) {
  return dict.apply_adjoint(y).lpNorm<Eigen::Infinity>();
}

double stable_lambda_max(const ApproxDictionary& dict, const Vector& y) {
  const Vector corr = dict.op->apply_adjoint(y);
  const double ynorm = y.norm();
  double best = 0.0;
  for (Index j = 0; j < corr.size(); ++j) {
    best = std::max(best, std::abs(corr(j)) + dict.atom_error_bounds(j) * ynorm);
  }
  return best;
}

double sphere_test(const Vector& atom, const SafeSphere& sphere) {
  return std::abs(atom.dot(sphere.center)) + sphere.radius * atom.norm();
}

double stable_zone_test(const Vector& approx_atom, double eps, double exact_atom_norm,
                        const SafeSphere& sphere) {
  return std::abs(approx_atom.dot(sphere.center)) + eps * sphere.center.norm() +
         sphere.radius * exact_atom_norm;
}

double stable_ball_test(const Vector& approx_atom, double eps, const SafeSphere& sphere) {
  return std::abs(approx_atom.dot(sphere.center)) + eps * sphere.center.norm() +
         sphere.radius * approx_atom.norm() + sphere.radius * eps;
}

Vector dual_scale(const Vector& z, const LinearOp& dict) {
  const double denom = std::max(1.0, dict.apply_adjoint(z).lpNorm<Eigen::Infinity>());
  return z / denom;
}

Vector stable_dual_scale(const Vector& z, const ApproxDictionary& dict) {
  const Vector corr = dict.op->apply_adjoint(z);
  const double znorm = z.norm();
  double worst = 0.0;
  for (Index j = 0; j < corr.size(); ++j) {
    worst = std::max(worst, std::abs(corr(j)) + dict.atom_error_bounds(j) * znorm);
  }
  return z / std::max(1.0, worst);
}

namespace {
double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }
}  // namespace

DualPoints dual_point_dynamic(const Vector& residual, const Vector& correlations,
                              const Vector& eps, const Vector& y, double lambda,
                              const LinearOp* dict_for_degenerate) {
  if (correlations.size() != eps.size()) {
    throw std::invalid_argument("correlations/eps length mismatch");
  }
  DualPoints out;
  const double rho_sq = residual.squaredNorm();
  if (rho_sq <= 0.0) {
    // Exact fit: no residual direction to project onto; scale y/lambda
    // instead.
    if (!dict_for_degenerate) throw std::invalid_argument("zero residual needs a dictionary");
    const Vector z = y / lambda;
    const Vector corr_z = dict_for_degenerate->apply_adjoint(z);
    const double znorm = z.norm();
    double worst_stable = 0.0;
    for (Index j = 0; j < corr_z.size(); ++j) {
      const double e = j < eps.size() ? eps(j) : 0.0;
      worst_stable = std::max(worst_stable, std::abs(corr_z(j)) + e * znorm);
    }
    out.theta_prime = z / std::max(1.0, worst_stable);
    out.theta_tilde = z / std::max(1.0, corr_z.lpNorm<Eigen::Infinity>());
    out.scale_prime = out.scale_tilde = 0.0;
    return out;
  }

  const double rho_norm = std::sqrt(rho_sq);
  double denom_stable = 0.0;
  double denom_plain = 0.0;
  for (Index j = 0; j < correlations.size(); ++j) {
    const double ac = std::abs(correlations(j));
    denom_plain = std::max(denom_plain, ac);
    denom_stable = std::max(denom_stable, ac + eps(j) * rho_norm);
  }
  const double projection = y.dot(residual) / (lambda * rho_sq);
  const double alpha_prime = denom_stable > 0 ? 1.0 / denom_stable
                                              : std::numeric_limits<double>::infinity();
  const double alpha_tilde = denom_plain > 0 ? 1.0 / denom_plain
                                             : std::numeric_limits<double>::infinity();
  out.scale_prime = clamp(projection, -alpha_prime, alpha_prime);
  out.scale_tilde = clamp(projection, -alpha_tilde, alpha_tilde);
  out.theta_prime = out.scale_prime * residual;
  out.theta_tilde = out.scale_tilde * residual;
  return out;
}

double stable_gap_delta(double residual_norm, double operator_error_bound, double x_l1) {
  return residual_norm * operator_error_bound * x_l1 +
         0.5 * operator_error_bound * operator_error_bound * x_l1 * x_l1;
}

SafeSphere build_sphere(Rule rule, const SphereInputs& in) {
  SafeSphere s;
  switch (rule) {
    case Rule::static_safe:
      s.center = *in.y / in.lambda;
      s.radius = std::abs(1.0 / in.lambda_max - 1.0 / in.lambda) * in.y->norm();
      break;
    case Rule::stable_static:
      s.center = *in.y / in.lambda;
      s.radius = std::abs(1.0 / in.stable_lambda_max - 1.0 / in.lambda) * in.y->norm();
      break;
    case Rule::dynamic_safe:
    case Rule::stable_dynamic:
      s.center = *in.y / in.lambda;
      s.radius = (*in.theta - *in.y / in.lambda).norm();
      break;
    case Rule::gap_safe:
      s.center = *in.theta;
      s.radius = std::sqrt(2.0 * std::max(in.gap, 0.0)) / in.lambda;
      break;
    case Rule::stable_gap:
      s.center = *in.theta;
      s.radius = std::sqrt(2.0 * std::max(in.gap, 0.0) + 2.0 * in.delta) / in.lambda;
      break;
  }
  return s;
}

ScreenResult screen_precomputed(const Vector& abs_atom_dot_center, const Vector& eps,
                                const Vector& exact_norms, const Vector& approx_norms,
                                double center_norm, double radius) {
  const Index n = abs_atom_dot_center.size();
  ScreenResult out;
  out.kept.reserve(static_cast<size_t>(n));
  for (Index j = 0; j < n; ++j) {
    const double dot = abs_atom_dot_center(j);
    if (stable_zone_test(dot, eps(j), center_norm, exact_norms(j), radius) >= 1.0) {
      out.kept.push_back(static_cast<int>(j));
    }
    if (sphere_test(dot, approx_norms(j), radius) >= 1.0) ++out.lookahead_count;
  }
  return out;
}

std::vector<int> screen(const std::vector<int>& active, const SafeSphere& sphere,
                        const ApproxDictionary& dict, bool use_stable) {
  const double center_norm = sphere.center.norm();
  const Vector dots = dict.op->apply_adjoint(sphere.center);
  std::vector<int> kept;
  kept.reserve(active.size());
  for (int j : active) {
    const double dot = std::abs(dots(j));
    const double value =
        use_stable ? stable_zone_test(dot, dict.atom_error_bounds(j), center_norm,
                                      dict.exact_atom_norms2(j), sphere.radius)
                   : sphere_test(dot, dict.approx_atom_norms2(j), sphere.radius);
    if (value >= 1.0) kept.push_back(j);
  }
  return kept;
}

}  // namespace fastl1
