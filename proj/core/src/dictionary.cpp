#include "fastl1/dictionary.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fastl1 {

namespace {

Index integer_sqrt(Index v) {
  auto r = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(v))));
  while (r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

Index require_perfect_square(Index v, const char* what) {
  const Index r = integer_sqrt(v);
  if (r * r != v) {
    throw std::invalid_argument(std::string(what) + " must be a perfect square, got " +
                                std::to_string(v));
  }
  return r;
}

// Rearrangement pairing A = sum_k B_k (x) C_k with R = sum_k vec(B_k) vec(C_k)^T:
// R(i + j m, r + s m) = A(i m + r, j q + s), B in R^{m x q}, C in R^{m x q}.
Matrix rearrange(const Matrix& a, Index m, Index q) {
  Matrix r(m * q, m * q);
  for (Index j = 0; j < q; ++j)
    for (Index i = 0; i < m; ++i)
      for (Index s = 0; s < q; ++s)
        for (Index rr = 0; rr < m; ++rr)
          r(i + j * m, rr + s * m) = a(i * m + rr, j * q + s);
  return r;
}

Matrix unrearrange(const Matrix& r, Index m, Index q) {
  Matrix a(m * m, q * q);
  for (Index j = 0; j < q; ++j)
    for (Index i = 0; i < m; ++i)
      for (Index s = 0; s < q; ++s)
        for (Index rr = 0; rr < m; ++rr)
          a(i * m + rr, j * q + s) = r(i + j * m, rr + s * m);
  return a;
}

}  // namespace

DenseDictionary::DenseDictionary(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() < 1 || entries_.cols() < 1) {
    throw std::invalid_argument("dictionary must have at least one row and one column");
  }
  atom_norms2_ = entries_.colwise().norm();
}

Vector DenseDictionary::apply(const Vector& x) const {
  if (x.size() != cols()) throw std::invalid_argument("matvec: x has wrong length");
  return entries_ * x;
}

Vector DenseDictionary::apply_adjoint(const Vector& r) const {
  if (r.size() != rows()) throw std::invalid_argument("adjoint matvec: r has wrong length");
  return entries_.transpose() * r;
}

DenseDictionary DenseDictionary::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::invalid_argument("ragged CSV in " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("empty CSV in " + path);
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
  return DenseDictionary(std::move(m));
}

void DenseDictionary::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open " + path + " for writing");
  char buf[40];
  for (Index i = 0; i < rows(); ++i) {
    for (Index j = 0; j < cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", entries_(i, j));
      out << buf << (j + 1 < cols() ? "," : "");
    }
    out << '\n';
  }
}

DenseDictionary DenseDictionary::load_blob(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::uint32_t n = 0, k = 0;
  in.read(reinterpret_cast<char*>(&n), 4);
  in.read(reinterpret_cast<char*>(&k), 4);
  if (!in || n == 0 || k == 0) throw std::invalid_argument("bad blob header in " + path);
  Matrix m(static_cast<Index>(n), static_cast<Index>(k));
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * n * k));
  if (!in) throw std::invalid_argument("truncated blob " + path);
  return DenseDictionary(std::move(m));
}

void DenseDictionary::save_blob(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open " + path + " for writing");
  const auto n = static_cast<std::uint32_t>(rows());
  const auto k = static_cast<std::uint32_t>(cols());
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(&k), 4);
  out.write(reinterpret_cast<const char*>(entries_.data()),
            static_cast<std::streamsize>(sizeof(double) * rows() * cols()));
}

SukroDictionary::SukroDictionary(std::vector<Term> terms) : terms_(std::move(terms)) {
  if (terms_.empty()) throw std::invalid_argument("SuKro needs at least one term");
  side_rows_ = terms_.front().left.rows();
  side_cols_ = terms_.front().left.cols();
  if (side_rows_ < 1 || side_cols_ < 1) throw std::invalid_argument("empty SuKro factor");
  for (const Term& t : terms_) {
    if (t.left.rows() != side_rows_ || t.left.cols() != side_cols_ ||
        t.right.rows() != side_rows_ || t.right.cols() != side_cols_) {
      throw std::invalid_argument("all SuKro factors must share one shape");
    }
  }
}

Vector SukroDictionary::apply(const Vector& x) const {
  if (x.size() != cols()) throw std::invalid_argument("matvec: x has wrong length");
  Eigen::Map<const Matrix> xmat(x.data(), side_cols_, side_cols_);
  Matrix acc = Matrix::Zero(side_rows_, side_rows_);
  for (const Term& t : terms_) acc.noalias() += t.right * xmat * t.left.transpose();
  return Eigen::Map<const Vector>(acc.data(), acc.size());
}

Vector SukroDictionary::apply_adjoint(const Vector& r) const {
  if (r.size() != rows()) throw std::invalid_argument("adjoint matvec: r has wrong length");
  Eigen::Map<const Matrix> rmat(r.data(), side_rows_, side_rows_);
  Matrix acc = Matrix::Zero(side_cols_, side_cols_);
  for (const Term& t : terms_) acc.noalias() += t.right.transpose() * rmat * t.left;
  return Eigen::Map<const Vector>(acc.data(), acc.size());
}

Vector SukroDictionary::column(Index j) const {
  if (j < 0 || j >= cols()) throw std::invalid_argument("column index out of range");
  const Index jb = j / side_cols_;
  const Index jc = j % side_cols_;
  Vector out = Vector::Zero(rows());
  for (const Term& t : terms_) {
    for (Index rb = 0; rb < side_rows_; ++rb) {
      out.segment(rb * side_rows_, side_rows_) += t.left(rb, jb) * t.right.col(jc);
    }
  }
  return out;
}

std::uint64_t SukroDictionary::matvec_flops() const {
  const auto n = static_cast<std::uint64_t>(rows());
  const auto k = static_cast<std::uint64_t>(cols());
  const auto m = static_cast<std::uint64_t>(side_rows_);
  const auto q = static_cast<std::uint64_t>(side_cols_);
  return static_cast<std::uint64_t>(terms_.size()) * (m * k + q * n);
}

Matrix SukroDictionary::to_dense() const {
  Matrix a = Matrix::Zero(rows(), cols());
  for (const Term& t : terms_) {
    for (Index i = 0; i < side_rows_; ++i)
      for (Index j = 0; j < side_cols_; ++j)
        a.block(i * side_rows_, j * side_cols_, side_rows_, side_cols_) += t.left(i, j) * t.right;
  }
  return a;
}

Index LinearOp::rows() const {
  return std::visit([](const auto& o) { return o.rows(); }, op_);
}
Index LinearOp::cols() const {
  return std::visit([](const auto& o) { return o.cols(); }, op_);
}
Vector LinearOp::apply(const Vector& x) const {
  return std::visit([&](const auto& o) { return o.apply(x); }, op_);
}
Vector LinearOp::apply_adjoint(const Vector& r) const {
  return std::visit([&](const auto& o) { return o.apply_adjoint(r); }, op_);
}
Vector LinearOp::column(Index j) const {
  return std::visit([&](const auto& o) { return o.column(j); }, op_);
}
std::uint64_t LinearOp::matvec_flops() const {
  return std::visit([](const auto& o) { return o.matvec_flops(); }, op_);
}

ApproxDictionary make_exact_approx(DenseDictionary dict) {
  ApproxDictionary d;
  d.atom_error_bounds = Vector::Zero(dict.cols());
  d.operator_error_bound = 0.0;
  d.relative_complexity = 1.0;
  d.approx_atom_norms2 = dict.atom_norms2();
  d.exact_atom_norms2 = dict.atom_norms2();
  d.op = std::make_shared<const LinearOp>(std::move(dict));
  return d;
}

void ApproxSequence::validate() const {
  if (dicts.empty()) throw std::invalid_argument("empty approximation sequence");
  const Index k = dicts.front().op->cols();
  for (size_t i = 0; i < dicts.size(); ++i) {
    const ApproxDictionary& d = dicts[i];
    if (d.op->cols() != k) throw std::invalid_argument("sequence has mismatched atom counts");
    if (d.atom_error_bounds.size() != k || (d.atom_error_bounds.array() < 0).any()) {
      throw std::invalid_argument("invalid atom error bounds");
    }
    if (d.relative_complexity <= 0.0 || d.relative_complexity > 1.0) {
      throw std::invalid_argument("relative complexity out of (0, 1]");
    }
    if (i > 0) {
      if (d.relative_complexity <= dicts[i - 1].relative_complexity) {
        throw std::invalid_argument("relative complexity must strictly increase");
      }
      if ((d.atom_error_bounds.array() > dicts[i - 1].atom_error_bounds.array() + 1e-15).any()) {
        throw std::invalid_argument("error bounds must be non-increasing along the sequence");
      }
    }
  }
  if (!dicts.back().is_exact() || dicts.back().relative_complexity != 1.0) {
    throw std::invalid_argument("sequence must end with the exact dictionary");
  }
}

void truncated_svd(const Matrix& m, int rank, Matrix& u, Vector& s, Matrix& v) {
  const Index mindim = std::min(m.rows(), m.cols());
  if (rank < 1 || rank > mindim) throw std::invalid_argument("truncated_svd: bad rank");
  const Index p = std::min<Index>(rank + 8, mindim);

  std::mt19937_64 rng(0x5eedf00dULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix omega(m.cols(), p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < m.cols(); ++i) omega(i, j) = gauss(rng);

  Matrix y = m * omega;
  auto orth = [](const Matrix& a) {
    Eigen::HouseholderQR<Matrix> qr(a);
    return Matrix(qr.householderQ() * Matrix::Identity(a.rows(), a.cols()));
  };
  for (int it = 0; it < 6; ++it) {
    Matrix q = orth(y);
    y.noalias() = m * (m.transpose() * q);
  }
  Matrix q = orth(y);
  Matrix bt = m.transpose() * q;  // cols x p
  Eigen::BDCSVD<Matrix> svd(bt, Eigen::ComputeThinU | Eigen::ComputeThinV);
  u = q * svd.matrixV().leftCols(rank);
  v = svd.matrixU().leftCols(rank);
  s = svd.singularValues().head(rank);
}

ApproxSequence build_sukro_sequence(const DenseDictionary& dict,
                                    const std::vector<int>& ranks) {
  const Index n = dict.rows();
  const Index k = dict.cols();
  const Index m = require_perfect_square(n, "N");
  const Index q = require_perfect_square(k, "K");
  if (ranks.empty()) throw std::invalid_argument("need at least one rank");
  for (size_t i = 0; i < ranks.size(); ++i) {
    if (ranks[i] < 1 || (i > 0 && ranks[i] <= ranks[i - 1])) {
      throw std::invalid_argument("ranks must be positive and strictly increasing");
    }
  }
  const int max_rank = ranks.back();
  if (max_rank > m * q) throw std::invalid_argument("rank exceeds rearranged dimension");

  const std::uint64_t dense_flops = dict.matvec_flops();
  Matrix u, v;
  Vector sv;
  {
    Matrix rearranged = rearrange(dict.entries(), m, q);
    truncated_svd(rearranged, max_rank, u, sv, v);
  }

  std::vector<SukroDictionary::Term> terms;
  terms.reserve(static_cast<size_t>(max_rank));
  for (int t = 0; t < max_rank; ++t) {
    const double scale = std::sqrt(std::max(sv(t), 0.0));
    SukroDictionary::Term term;
    term.left = Eigen::Map<const Matrix>(u.col(t).data(), m, q) * scale;
    term.right = Eigen::Map<const Matrix>(v.col(t).data(), m, q) * scale;
    terms.push_back(std::move(term));
  }

  ApproxSequence seq;
  Matrix residual = dict.entries();
  size_t next_snapshot = 0;
  for (int t = 0; t < max_rank && next_snapshot < ranks.size(); ++t) {
    const SukroDictionary::Term& term = terms[static_cast<size_t>(t)];
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < q; ++j)
        residual.block(i * m, j * q, m, q) -= term.left(i, j) * term.right;
    if (t + 1 == ranks[next_snapshot]) {
      ApproxDictionary d;
      SukroDictionary op(std::vector<SukroDictionary::Term>(
          terms.begin(), terms.begin() + ranks[next_snapshot]));
      if (op.matvec_flops() >= dense_flops) {
        throw std::invalid_argument("rank " + std::to_string(ranks[next_snapshot]) +
                                    " gives relative complexity >= 1");
      }
      d.relative_complexity =
          static_cast<double>(op.matvec_flops()) / static_cast<double>(dense_flops);
      d.atom_error_bounds = residual.colwise().norm();
      d.approx_atom_norms2.resize(k);
      for (Index j = 0; j < k; ++j) {
        d.approx_atom_norms2(j) = (dict.entries().col(j) - residual.col(j)).norm();
      }
      d.exact_atom_norms2 = dict.atom_norms2();
      d.op = std::make_shared<const LinearOp>(std::move(op));
      seq.dicts.push_back(std::move(d));
      ++next_snapshot;
    }
  }

  // Bounds stay valid per level; the running max keeps them monotone
  // across levels when per-column truncation errors wobble.
  for (size_t i = seq.dicts.size(); i-- > 1;) {
    seq.dicts[i - 1].atom_error_bounds =
        seq.dicts[i - 1].atom_error_bounds.cwiseMax(seq.dicts[i].atom_error_bounds);
  }
  for (ApproxDictionary& d : seq.dicts) {
    d.operator_error_bound = d.atom_error_bounds.maxCoeff();
  }

  seq.dicts.push_back(make_exact_approx(dict));
  seq.validate();
  return seq;
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "easy") return Scenario::easy;
  if (s == "moderate") return Scenario::moderate;
  if (s == "hard") return Scenario::hard;
  throw std::invalid_argument("unknown scenario: " + s);
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::easy: return "easy";
    case Scenario::moderate: return "moderate";
    case Scenario::hard: return "hard";
  }
  return "?";
}

double scenario_decay_ratio(Scenario s) {
  switch (s) {
    case Scenario::easy: return 0.3;
    case Scenario::moderate: return 0.6;
    case Scenario::hard: return 0.95;
  }
  return 0.6;
}

DenseDictionary synthesize_scenario(Index n, Index k, Scenario scenario,
                                    std::uint64_t seed) {
  const Index m = require_perfect_square(n, "N");
  const Index q = require_perfect_square(k, "K");
  const Index n_terms = std::min<Index>(40, m);
  const double ratio = scenario_decay_ratio(scenario);

  std::mt19937_64 rng(seed ^ 0xd1c7u);
  std::normal_distribution<double> gauss(0.0, 1.0);
  // One random orthonormal frame of n_terms vectors per factor column, so
  // Kronecker-term columns are mutually orthogonal per atom and every atom
  // of the sum has exactly the same norm. Column renormalization then
  // reduces to a global scalar and the rearranged matrix keeps the exact
  // prescribed geometric spectrum (the factor families stay orthonormal
  // after vectorization).
  auto random_frame = [&](Index rows, Index cols) {
    Matrix g(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) g(i, j) = gauss(rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    return Matrix(qr.householderQ() * Matrix::Identity(rows, cols));
  };

  std::vector<Matrix> left(static_cast<size_t>(n_terms), Matrix(m, q));
  std::vector<Matrix> right(static_cast<size_t>(n_terms), Matrix(m, q));
  const double col_scale = 1.0 / std::sqrt(static_cast<double>(q));
  for (Index j = 0; j < q; ++j) {
    const Matrix fb = random_frame(m, n_terms);
    const Matrix fc = random_frame(m, n_terms);
    for (Index t = 0; t < n_terms; ++t) {
      left[static_cast<size_t>(t)].col(j) = col_scale * fb.col(t);
      right[static_cast<size_t>(t)].col(j) = col_scale * fc.col(t);
    }
  }

  Matrix a = Matrix::Zero(n, k);
  for (Index t = 0; t < n_terms; ++t) {
    const double sv = std::pow(ratio, static_cast<double>(t));
    const Matrix& b = left[static_cast<size_t>(t)];
    const Matrix& c = right[static_cast<size_t>(t)];
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < q; ++j)
        a.block(i * m, j * q, m, q) += (sv * b(i, j)) * c;
  }
  for (Index j = 0; j < k; ++j) {
    const double norm = a.col(j).norm();
    if (norm < 1e-14) throw std::runtime_error("degenerate column in synthesized dictionary");
    a.col(j) /= norm;
  }
  return DenseDictionary(std::move(a));
}

double measure_rc(const LinearOp& op, const Matrix& dense_baseline, int repeats) {
  if (op.rows() != dense_baseline.rows() || op.cols() != dense_baseline.cols()) {
    throw std::invalid_argument("measure_rc: shape mismatch");
  }
  Vector x = Vector::Ones(op.cols());
  Vector sink = Vector::Zero(op.rows());
  using clock = std::chrono::steady_clock;
  volatile double guard = 0.0;

  auto t0 = clock::now();
  for (int i = 0; i < repeats; ++i) {
    sink = op.apply(x);
    guard = guard + sink(0);
  }
  const double op_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();

  t0 = clock::now();
  for (int i = 0; i < repeats; ++i) {
    sink.noalias() = dense_baseline * x;
    guard = guard + sink(0);
  }
  const double dense_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  (void)guard;
  return dense_ms > 0 ? op_ms / dense_ms : 1.0;
}

}  // namespace fastl1
