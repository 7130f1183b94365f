// Test-only oracles, independent of the library paths they check.
#pragma once

#include "fastl1/dictionary.hpp"
#include "fastl1/solver.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <random>
#include <stdexcept>
#include <vector>

namespace testkit {

using fastl1::Index;
using fastl1::Matrix;
using fastl1::Vector;

// Explicit Kronecker product by definition, entry by entry.
inline Matrix kron_dense(const Matrix& b, const Matrix& c) {
  Matrix out(b.rows() * c.rows(), b.cols() * c.cols());
  for (Index i = 0; i < b.rows(); ++i)
    for (Index j = 0; j < b.cols(); ++j)
      out.block(i * c.rows(), j * c.cols(), c.rows(), c.cols()) = b(i, j) * c;
  return out;
}

inline Matrix sukro_to_dense_oracle(const fastl1::SukroDictionary& s) {
  Matrix out = Matrix::Zero(s.rows(), s.cols());
  for (const auto& t : s.terms()) out += kron_dense(t.left, t.right);
  return out;
}

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = gauss(rng);
  return m;
}

inline Vector random_vector(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0xabcdef);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = gauss(rng);
  return v;
}

inline fastl1::SukroDictionary random_sukro(Index side_rows, Index side_cols, int n_kron,
                                            std::uint64_t seed) {
  std::vector<fastl1::SukroDictionary::Term> terms;
  for (int t = 0; t < n_kron; ++t) {
    terms.push_back({random_matrix(side_rows, side_cols, seed + 31 * t),
                     random_matrix(side_rows, side_cols, seed + 31 * t + 7)});
  }
  return fastl1::SukroDictionary(std::move(terms));
}

// Column-normalized random dense dictionary.
inline fastl1::DenseDictionary random_dictionary(Index n, Index k, std::uint64_t seed) {
  Matrix m = random_matrix(n, k, seed);
  for (Index j = 0; j < k; ++j) m.col(j) /= m.col(j).norm();
  return fastl1::DenseDictionary(std::move(m));
}

// Sparse ground truth and a normalized observation, the generator's shape.
struct Instance {
  fastl1::DenseDictionary dict;
  Vector y;
  double lambda = 0.0;
};

inline Instance random_instance(Index n, Index k, double lambda_ratio, std::uint64_t seed,
                                int support = 5) {
  Instance inst{random_dictionary(n, k, seed), Vector(), 0.0};
  std::mt19937_64 rng(seed ^ 0x5117);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<Index> pick(0, k - 1);
  Vector x = Vector::Zero(k);
  for (int s = 0; s < support; ++s) x(pick(rng)) = gauss(rng);
  inst.y = inst.dict.apply(x);
  inst.y /= inst.y.norm();
  const double lmax = inst.dict.apply_adjoint(inst.y).lpNorm<Eigen::Infinity>();
  inst.lambda = lambda_ratio * lmax;
  return inst;
}

// High-precision lasso oracle: FISTA iterations with periodic support
// polishing. Once the working support is identified, the candidate solves
// the support-restricted stationarity system exactly; a full KKT check
// then certifies the result. Fails loudly if the target gap is not met.
struct OracleSolution {
  Vector x;
  Vector theta;  // (y - A x) / lambda
  double gap = 0.0;
};

inline OracleSolution solve_oracle(const fastl1::DenseDictionary& dict, const Vector& y,
                                   double lambda, double target_gap = 1e-12,
                                   int max_iter = 400000) {
  const Matrix& a = dict.entries();
  const Index k = a.cols();
  const double l = Eigen::BDCSVD<Matrix>(a).singularValues()(0);
  const double inv_l = 1.0 / (l * l * 1.0000001);

  auto gap_of = [&](const Vector& x) {
    const Vector rho = y - a * x;
    Vector corr = a.transpose() * rho;
    const double infnorm = corr.lpNorm<Eigen::Infinity>();
    const double proj = y.dot(rho) / (lambda * std::max(rho.squaredNorm(), 1e-300));
    const double alpha = infnorm > 0 ? 1.0 / infnorm : 1e300;
    const double s = std::min(std::max(proj, -alpha), alpha);
    const Vector theta = s * rho;
    const double primal = 0.5 * rho.squaredNorm() + lambda * x.lpNorm<1>();
    const double dual =
        0.5 * y.squaredNorm() - 0.5 * lambda * lambda * (theta - y / lambda).squaredNorm();
    return primal - dual;
  };

  Vector x = Vector::Zero(k), x_prev = x;
  double t_k = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_k * t_k));
    const double m = (t_k - 1.0) / t_next;
    Vector w = x + m * (x - x_prev);
    Vector grad_pt = w + inv_l * (a.transpose() * (y - a * w));
    Vector x_next(k);
    for (Index j = 0; j < k; ++j) x_next(j) = fastl1::soft_threshold(grad_pt(j), lambda * inv_l);
    x_prev = x;
    x = x_next;
    t_k = t_next;

    if (it % 50 == 49) {
      // Polish: exact solve on the current sign pattern, accepted only if
      // the full KKT conditions hold.
      std::vector<Index> supp;
      for (Index j = 0; j < k; ++j)
        if (x(j) != 0.0) supp.push_back(j);
      if (!supp.empty() && supp.size() < static_cast<size_t>(a.rows())) {
        Matrix as(a.rows(), static_cast<Index>(supp.size()));
        Vector signs(static_cast<Index>(supp.size()));
        for (size_t i = 0; i < supp.size(); ++i) {
          as.col(static_cast<Index>(i)) = a.col(supp[i]);
          signs(static_cast<Index>(i)) = x(supp[i]) > 0 ? 1.0 : -1.0;
        }
        const Matrix gram = as.transpose() * as;
        const Vector rhs = as.transpose() * y - lambda * signs;
        const Vector xs = gram.ldlt().solve(rhs);
        Vector cand = Vector::Zero(k);
        bool sign_ok = true;
        for (size_t i = 0; i < supp.size(); ++i) {
          cand(supp[i]) = xs(static_cast<Index>(i));
          if (xs(static_cast<Index>(i)) * signs(static_cast<Index>(i)) < 0) sign_ok = false;
        }
        if (sign_ok) {
          const Vector theta = (y - a * cand) / lambda;
          if ((a.transpose() * theta).lpNorm<Eigen::Infinity>() <= 1.0 + 1e-12 &&
              gap_of(cand) <= target_gap) {
            x = cand;
            break;
          }
        }
      }
      if (gap_of(x) <= target_gap) break;
    }
  }

  OracleSolution sol;
  sol.gap = gap_of(x);
  if (sol.gap > target_gap) {
    throw std::runtime_error("oracle did not reach the target gap: " + std::to_string(sol.gap));
  }
  sol.x = x;
  sol.theta = (y - a * x) / lambda;
  return sol;
}

inline std::vector<Index> support_of(const Vector& x, double tol = 0.0) {
  std::vector<Index> s;
  for (Index j = 0; j < x.size(); ++j)
    if (std::abs(x(j)) > tol) s.push_back(j);
  return s;
}

}  // namespace testkit
