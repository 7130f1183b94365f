#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace fastl1 {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Dense dictionary: an N x K matrix whose columns are the atoms.
// Column l2 norms are precomputed at construction.
class DenseDictionary {
 public:
  DenseDictionary() = default;
  explicit DenseDictionary(Matrix entries);

  Index rows() const { return entries_.rows(); }
  Index cols() const { return entries_.cols(); }
  const Matrix& entries() const { return entries_; }
  const Vector& atom_norms2() const { return atom_norms2_; }

  Vector apply(const Vector& x) const;          // A x
  Vector apply_adjoint(const Vector& r) const;  // A^T r
  Vector column(Index j) const { return entries_.col(j); }

  std::uint64_t matvec_flops() const {
    return static_cast<std::uint64_t>(rows()) * static_cast<std::uint64_t>(cols());
  }

  // Header-free row-major CSV.
  static DenseDictionary load_csv(const std::string& path);
  void save_csv(const std::string& path) const;

  // Column-major float64 blob with an 8-byte (N, K) little-endian header
  // (two uint32 fields).
  static DenseDictionary load_blob(const std::string& path);
  void save_blob(const std::string& path) const;

 private:
  Matrix entries_;
  Vector atom_norms2_;
};

// Sum-of-Kronecker-products operator: sum_k B_k (x) C_k with
// B_k, C_k of shape sqrt(N) x sqrt(K). Applies in
// n_kron * (sqrt(N) K + sqrt(K) N) multiply-adds instead of N K.
class SukroDictionary {
 public:
  struct Term {
    Matrix left;   // B_k
    Matrix right;  // C_k
  };

  explicit SukroDictionary(std::vector<Term> terms);

  Index rows() const { return side_rows_ * side_rows_; }
  Index cols() const { return side_cols_ * side_cols_; }
  Index term_count() const { return static_cast<Index>(terms_.size()); }
  const std::vector<Term>& terms() const { return terms_; }

  // (B (x) C) vec(X) = vec(C X B^T) with X = reshape(x, sqrtK, sqrtK).
  Vector apply(const Vector& x) const;
  // (B (x) C)^T vec(R) = vec(C^T R B) with R = reshape(r, sqrtN, sqrtN).
  Vector apply_adjoint(const Vector& r) const;
  // Column j = j_b * sqrtK + j_c equals sum_k b_{j_b} (x) c_{j_c}.
  Vector column(Index j) const;

  std::uint64_t matvec_flops() const;
  Matrix to_dense() const;

 private:
  std::vector<Term> terms_;
  Index side_rows_ = 0;  // sqrt(N)
  Index side_cols_ = 0;  // sqrt(K)
};

// Value-semantic handle over either operator kind. Immutable after
// construction; safe to share across concurrent solves.
class LinearOp {
 public:
  explicit LinearOp(DenseDictionary d) : op_(std::move(d)) {}
  explicit LinearOp(SukroDictionary s) : op_(std::move(s)) {}

  Index rows() const;
  Index cols() const;
  Vector apply(const Vector& x) const;
  Vector apply_adjoint(const Vector& r) const;
  Vector column(Index j) const;
  std::uint64_t matvec_flops() const;

  bool is_dense() const { return std::holds_alternative<DenseDictionary>(op_); }
  const DenseDictionary* dense() const { return std::get_if<DenseDictionary>(&op_); }
  const SukroDictionary* sukro() const { return std::get_if<SukroDictionary>(&op_); }

 private:
  std::variant<DenseDictionary, SukroDictionary> op_;
};

// An approximation of a dense dictionary together with certified error
// bounds. atom_error_bounds[j] >= ||atilde_j - a_j||_2, and
// operator_error_bound = max_j atom_error_bounds[j], which upper-bounds
// the 1->2 operator norm of the approximation error. Exact atom norms are
// kept alongside so norm-restricted screening zones are always available.
struct ApproxDictionary {
  std::shared_ptr<const LinearOp> op;
  Vector atom_error_bounds;     // eps, length K
  double operator_error_bound;  // max_j eps_j
  double relative_complexity;   // matvec_flops / (N K), in (0, 1]
  Vector approx_atom_norms2;    // ||atilde_j||_2
  Vector exact_atom_norms2;     // ||a_j||_2

  bool is_exact() const { return operator_error_bound == 0.0; }
};

// Exact dictionary wrapped as a degenerate approximation (eps = 0, RC = 1).
ApproxDictionary make_exact_approx(DenseDictionary dict);

// Ordered list of approximations with strictly increasing relative
// complexity and component-wise non-increasing error bounds; the last
// element is the exact dictionary.
struct ApproxSequence {
  std::vector<ApproxDictionary> dicts;

  int levels() const { return static_cast<int>(dicts.size()); }
  const ApproxDictionary& exact() const { return dicts.back(); }
  void validate() const;  // throws std::invalid_argument on violation
};

// Builds a SuKro approximation sequence for A by rearranging A into a
// sqrt(N)sqrt(K) x sqrt(N)sqrt(K) matrix whose rank-r truncations factor
// into r Kronecker terms, one SukroDictionary per requested rank, exact
// dictionary appended last. Error bounds are measured column norms of the
// actual residual, then max-accumulated from finer to coarser levels so
// they are monotone across the sequence. N and K must be perfect squares;
// ranks strictly increasing with RC < 1.
ApproxSequence build_sukro_sequence(const DenseDictionary& dict,
                                    const std::vector<int>& ranks);

enum class Scenario { easy, moderate, hard };

Scenario scenario_from_string(const std::string& s);
std::string to_string(Scenario s);

// Random dictionary with a prescribed speedup-vs-error profile: a sum of
// Kronecker products of random orthonormalized factors with geometric
// singular-value decay of the rearranged matrix (fast decay = easy to
// approximate), columns renormalized to unit l2 norm. Deterministic in
// seed.
DenseDictionary synthesize_scenario(Index n, Index k, Scenario scenario,
                                    std::uint64_t seed);

// Geometric decay ratio used by synthesize_scenario.
double scenario_decay_ratio(Scenario s);

// Top-r singular triplets by randomized subspace iteration. Deterministic.
void truncated_svd(const Matrix& m, int rank, Matrix& u, Vector& s, Matrix& v);

// Wall-clock calibration of the relative complexity of an operator against
// a dense baseline of the same shape. Informational only; the theoretical
// RC is what the switching criterion uses unless overridden.
double measure_rc(const LinearOp& op, const Matrix& dense_baseline, int repeats = 5);

}  // namespace fastl1
