#include "fastl1/fastl1.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fastl1 {

SolverKind solver_from_string(const std::string& s) {
  if (s == "ista") return SolverKind::ista;
  if (s == "fista") return SolverKind::fista;
  throw std::invalid_argument("unknown solver: " + s);
}

RuleKind rule_from_string(const std::string& s) {
  if (s == "dynamic") return RuleKind::dynamic_safe;
  if (s == "gap") return RuleKind::gap_safe;
  throw std::invalid_argument("unknown rule: " + s);
}

std::string to_string(SolverKind s) { return s == SolverKind::ista ? "ista" : "fista"; }
std::string to_string(RuleKind r) { return r == RuleKind::dynamic_safe ? "dynamic" : "gap"; }

double gap_ratio(double gap_tilde, double gap_prime) {
  if (gap_prime <= 1e-15) return 0.0;
  const double ratio = gap_tilde / gap_prime;
  return std::min(std::max(ratio, 0.0), 1.0);
}

int switch_dictionary(int i, int last, double gamma, double gamma_threshold,
                      std::int64_t lookahead, double rc_i, std::int64_t total_atoms) {
  if (i >= last) return last;
  if (static_cast<double>(lookahead) <= rc_i * static_cast<double>(total_atoms)) return last;
  if (gamma <= gamma_threshold) return i + 1;
  return i;
}

std::uint64_t flops_plain(std::uint64_t k, std::uint64_t n, std::uint64_t nnz) {
  return (k + nnz) * n + 4 * k + n;
}
std::uint64_t flops_screened(std::uint64_t active, std::uint64_t n, std::uint64_t nnz) {
  return (active + nnz) * n + 6 * active + 5 * n;
}
std::uint64_t flops_stable(std::uint64_t matvec, std::uint64_t n, std::uint64_t active,
                           std::uint64_t nnz) {
  return matvec + nnz * n + 8 * active + 7 * n;
}

std::uint64_t recompute_flops(const std::vector<TraceRow>& trace, const ApproxSequence& seq,
                              Variant variant, Index n, Index k, bool* rows_match) {
  const auto un = static_cast<std::uint64_t>(n);
  const auto uk = static_cast<std::uint64_t>(k);
  const int last = seq.levels() - 1;
  std::uint64_t total = 0;
  bool all_rows = true;
  for (const TraceRow& row : trace) {
    const auto active = static_cast<std::uint64_t>(row.active_size);
    const auto nnz = static_cast<std::uint64_t>(row.x_nnz);
    switch (variant) {
      case Variant::plain:
        total += flops_plain(uk, un, nnz);
        break;
      case Variant::screened:
        total += flops_screened(active, un, nnz);
        break;
      case Variant::multi_dict:
        if (row.dict_index < last) {
          total += flops_stable(seq.dicts[static_cast<size_t>(row.dict_index)].op->matvec_flops(),
                                un, active, nnz);
        } else {
          total += flops_screened(active, un, nnz);
        }
        break;
    }
    all_rows = all_rows && total == row.flops_cum;
  }
  if (rows_match) *rows_match = all_rows;
  return total;
}

namespace {

int count_nonzeros(const Vector& v) {
  int n = 0;
  for (Index i = 0; i < v.size(); ++i) {
    if (v(i) != 0.0) ++n;
  }
  return n;
}

// A dictionary restricted to the preserved columns. Dense bases switch to a
// compacted copy once the active set has shrunk enough to pay for the copy.
class ActiveOp {
 public:
  ActiveOp(const ApproxDictionary* base, bool allow_compaction)
      : base_(base), allow_compaction_(allow_compaction) {
    active_.resize(static_cast<size_t>(base->op->cols()));
    std::iota(active_.begin(), active_.end(), 0);
    compaction_width_ = base->op->cols();
    gather_metadata();
  }

  void rebase(const ApproxDictionary* base) {
    base_ = base;
    compact_.resize(0, 0);
    compacted_ = false;
    compaction_width_ = base->op->cols();
    maybe_compact();
    gather_metadata();
  }

  // kept holds positions into the current active list.
  void restrict_to_local(const std::vector<int>& kept) {
    std::vector<int> next;
    next.reserve(kept.size());
    for (int pos : kept) next.push_back(active_[static_cast<size_t>(pos)]);
    active_ = std::move(next);
    if (compacted_) {
      Matrix next_compact(compact_.rows(), static_cast<Index>(kept.size()));
      for (size_t j = 0; j < kept.size(); ++j) {
        next_compact.col(static_cast<Index>(j)) = compact_.col(kept[j]);
      }
      compact_ = std::move(next_compact);
    }
    maybe_compact();
    gather_metadata();
  }

  Vector apply(const Vector& x_compact) const {
    if (compacted_) return compact_ * x_compact;
    if (const DenseDictionary* d = base_->op->dense()) {
      Vector out = Vector::Zero(d->rows());
      for (size_t j = 0; j < active_.size(); ++j) {
        const double xj = x_compact(static_cast<Index>(j));
        if (xj != 0.0) out += xj * d->entries().col(active_[j]);
      }
      return out;
    }
    Vector padded = Vector::Zero(base_->op->cols());
    for (size_t j = 0; j < active_.size(); ++j) {
      padded(active_[j]) = x_compact(static_cast<Index>(j));
    }
    return base_->op->apply(padded);
  }

  Vector apply_adjoint(const Vector& r) const {
    if (compacted_) return compact_.transpose() * r;
    if (const DenseDictionary* d = base_->op->dense()) {
      Vector out(static_cast<Index>(active_.size()));
      for (size_t j = 0; j < active_.size(); ++j) {
        out(static_cast<Index>(j)) = d->entries().col(active_[j]).dot(r);
      }
      return out;
    }
    const Vector full = base_->op->apply_adjoint(r);
    Vector out(static_cast<Index>(active_.size()));
    for (size_t j = 0; j < active_.size(); ++j) out(static_cast<Index>(j)) = full(active_[j]);
    return out;
  }

  Vector column_global(int j) const { return base_->op->column(j); }

  Index rows() const { return base_->op->rows(); }
  Index size() const { return static_cast<Index>(active_.size()); }
  const std::vector<int>& active() const { return active_; }
  const ApproxDictionary& base() const { return *base_; }

  const Vector& eps() const { return eps_; }
  const Vector& exact_norms() const { return exact_norms_; }
  const Vector& approx_norms() const { return approx_norms_; }
  double max_eps() const { return max_eps_; }

 private:
  void maybe_compact() {
    if (!allow_compaction_ || !base_->op->is_dense()) return;
    if (2 * static_cast<Index>(active_.size()) > compaction_width_) return;
    const Matrix& entries = base_->op->dense()->entries();
    Matrix next(entries.rows(), static_cast<Index>(active_.size()));
    for (size_t j = 0; j < active_.size(); ++j) {
      next.col(static_cast<Index>(j)) = entries.col(active_[j]);
    }
    compact_ = std::move(next);
    compacted_ = true;
    compaction_width_ = static_cast<Index>(active_.size());
  }

  void gather_metadata() {
    const Index n = size();
    eps_.resize(n);
    exact_norms_.resize(n);
    approx_norms_.resize(n);
    for (Index j = 0; j < n; ++j) {
      const int g = active_[static_cast<size_t>(j)];
      eps_(j) = base_->atom_error_bounds(g);
      exact_norms_(j) = base_->exact_atom_norms2(g);
      approx_norms_(j) = base_->approx_atom_norms2(g);
    }
    max_eps_ = n > 0 ? eps_.maxCoeff() : 0.0;
  }

  const ApproxDictionary* base_;
  bool allow_compaction_;
  std::vector<int> active_;
  Vector eps_, exact_norms_, approx_norms_;
  double max_eps_ = 0.0;
  Matrix compact_;
  bool compacted_ = false;
  Index compaction_width_ = 0;
};

struct Engine {
  const ApproxSequence& seq;
  const Vector& y;
  const double lambda;
  const SwitchConfig& cfg;
  const RunOptions& opts;

  const Index n;
  const Index k;
  const int last;  // index of the exact dictionary
  int dict_index;

  ActiveOp op;
  Vector x;        // compact iterate
  Vector x_prev;   // compact, FISTA history
  double t_k = 1.0;
  bool momentum_ready = false;

  // Tracked products of the current dictionary.
  bool gram_mode = false;
  Vector u;   // A x            (explicit mode)
  Vector v;   // A x_prev       (explicit mode)
  Vector gx;  // G x, full K    (gram mode)
  Vector gv;  // G x_prev
  Vector aty_full;  // A^T y, full K (gram mode)

  Vector aty_active;        // Atilde^T y over active (dynamic rule)
  Vector aty_exact_active;  // A^T y over active (precompute_aty variant)

  const double y_sqnorm;
  const double y_norm;

  double lipschitz = 0.0;
  double inv_l = 0.0;
  Vector lead_vector;
  Index active_at_last_l = 0;

  SolveResult result;
  std::uint64_t ledger = 0;
  std::chrono::steady_clock::time_point t_start;

  Engine(const ApproxSequence& s, const Vector& yy, double lam, const SwitchConfig& c,
         const RunOptions& o)
      : seq(s),
        y(yy),
        lambda(lam),
        cfg(c),
        opts(o),
        n(s.exact().op->rows()),
        k(s.exact().op->cols()),
        last(s.levels() - 1),
        dict_index(o.variant == Variant::multi_dict ? 0 : last),
        op(&s.dicts[static_cast<size_t>(dict_index)], o.exact_gram == nullptr),
        y_sqnorm(yy.squaredNorm()),
        y_norm(yy.norm()) {
    if (lambda <= 0) throw std::invalid_argument("lambda must be positive");
    if (y.size() != n) throw std::invalid_argument("y has wrong length");
    if (cfg.gamma_threshold <= 0.0 || cfg.gamma_threshold >= 1.0) {
      throw std::invalid_argument("gamma threshold must lie in (0, 1)");
    }
    if (cfg.screening_interval < 1) throw std::invalid_argument("screening interval must be >= 1");
    x = Vector::Zero(k);
    setup_dictionary(true);
  }

  bool use_gram_now() const {
    return opts.exact_gram != nullptr && !opts.observer && dict_index == last &&
           seq.dicts[static_cast<size_t>(dict_index)].op->is_dense();
  }

  void setup_dictionary(bool first) {
    const ApproxDictionary& d = seq.dicts[static_cast<size_t>(dict_index)];
    if (!first) op.rebase(&d);
    gram_mode = use_gram_now();

    if (gram_mode && aty_full.size() == 0) {
      aty_full = d.op->apply_adjoint(y);
    }
    if (opts.rule == RuleKind::dynamic_safe) {
      if (gram_mode) {
        gather_from_full(aty_full, aty_active);
      } else {
        aty_active = op.apply_adjoint(y);
      }
      if (cfg.precompute_aty && aty_exact_active.size() == 0) {
        Vector full = seq.exact().op->apply_adjoint(y);
        aty_exact_active.resize(op.size());
        for (Index j = 0; j < op.size(); ++j) {
          aty_exact_active(j) = full(op.active()[static_cast<size_t>(j)]);
        }
      }
    }

    if (opts.full_lipschitz && op.size() == k) {
      lipschitz = (*opts.full_lipschitz)[static_cast<size_t>(dict_index)];
    } else {
      lipschitz = restricted_lipschitz();
    }
    inv_l = 1.0 / lipschitz;
    active_at_last_l = op.size();

    // Tracked products restart with the new operator.
    if (gram_mode) {
      gx = gram_product(x);
      gv.resize(0);
    } else {
      u = op.apply(x);
      v.resize(0);
    }
    momentum_ready = false;
    t_k = 1.0;
  }

  double restricted_lipschitz() {
    const Vector* warm =
        lead_vector.size() == op.size() && lead_vector.norm() > 0 ? &lead_vector : nullptr;
    const double sq = detail::power_iteration_sq_norm(
        [&](const Vector& xv) { return op.apply(xv); },
        [&](const Vector& rv) { return op.apply_adjoint(rv); }, op.size(), warm, &lead_vector);
    return std::max(sq, 1e-300) * kLipschitzSafety;
  }

  Vector gram_product(const Vector& compact) const {
    Vector out = Vector::Zero(k);
    for (Index j = 0; j < compact.size(); ++j) {
      const double xj = compact(j);
      if (xj != 0.0) out += xj * opts.exact_gram->col(op.active()[static_cast<size_t>(j)]);
    }
    return out;
  }

  void gather_from_full(const Vector& full, Vector& out) const {
    out.resize(op.size());
    for (Index j = 0; j < op.size(); ++j) out(j) = full(op.active()[static_cast<size_t>(j)]);
  }

  // Scalars describing the residual ray at the gradient point and at the
  // current iterate.
  struct Products {
    Vector corr;          // Atilde^T rho_g over active
    double rho_g_sq = 0;  // ||y - A g||^2
    double rho_g_dot_y = 0;
    double rho_x_sq = 0;  // ||y - A x||^2
    Vector rho_g;         // explicit mode only (empty in gram mode)
  };

  Products compute_products(double momentum) {
    Products p;
    if (!gram_mode) {
      Vector uw = u;
      if (momentum != 0.0) uw = (1.0 + momentum) * u - momentum * v;
      p.rho_g = y - uw;
      p.corr = op.apply_adjoint(p.rho_g);
      p.rho_g_sq = p.rho_g.squaredNorm();
      p.rho_g_dot_y = y.dot(p.rho_g);
      p.rho_x_sq = momentum != 0.0 ? (y - u).squaredNorm() : p.rho_g_sq;
      return p;
    }
    Vector gw = gx;
    if (momentum != 0.0) gw = (1.0 + momentum) * gx - momentum * gv;
    Vector corr_full = aty_full - gw;
    gather_from_full(corr_full, p.corr);

    Vector gw_active, gx_active, aty_act;
    gather_from_full(gw, gw_active);
    gather_from_full(aty_full, aty_act);
    Vector w = x;
    if (momentum != 0.0) w = (1.0 + momentum) * x - momentum * x_prev;
    const double w_aty = w.dot(aty_act);
    const double w_gw = w.dot(gw_active);
    p.rho_g_sq = std::max(y_sqnorm - 2.0 * w_aty + w_gw, 0.0);
    p.rho_g_dot_y = y_sqnorm - w_aty;
    if (momentum != 0.0) {
      gather_from_full(gx, gx_active);
      const double x_aty = x.dot(aty_act);
      const double x_gx = x.dot(gx_active);
      p.rho_x_sq = std::max(y_sqnorm - 2.0 * x_aty + x_gx, 0.0);
    } else {
      p.rho_x_sq = p.rho_g_sq;
    }
    return p;
  }

  // theta = scale * ray where ray is the residual (ray_is_y = false) or y
  // (degenerate exact-fit case).
  struct DualScalars {
    double scale_prime = 0;
    double scale_tilde = 0;
    bool ray_is_y = false;
    double ray_sq = 0;
    double ray_dot_y = 0;
  };

  DualScalars dual_scalars(const Products& p) {
    DualScalars d;
    if (p.rho_g_sq > 0.0) {
      d.ray_sq = p.rho_g_sq;
      d.ray_dot_y = p.rho_g_dot_y;
      const double rho_norm = std::sqrt(p.rho_g_sq);
      double denom_plain = 0.0, denom_stable = 0.0;
      const Vector& eps = op.eps();
      for (Index j = 0; j < p.corr.size(); ++j) {
        const double ac = std::abs(p.corr(j));
        denom_plain = std::max(denom_plain, ac);
        denom_stable = std::max(denom_stable, ac + eps(j) * rho_norm);
      }
      const double projection = p.rho_g_dot_y / (lambda * p.rho_g_sq);
      const double a_prime =
          denom_stable > 0 ? 1.0 / denom_stable : std::numeric_limits<double>::infinity();
      const double a_tilde =
          denom_plain > 0 ? 1.0 / denom_plain : std::numeric_limits<double>::infinity();
      d.scale_prime = std::min(std::max(projection, -a_prime), a_prime);
      d.scale_tilde = std::min(std::max(projection, -a_tilde), a_tilde);
      return d;
    }
    // Exact fit: fall back to scaling y/lambda.
    d.ray_is_y = true;
    d.ray_sq = y_sqnorm;
    d.ray_dot_y = y_sqnorm;
    Vector corr_y;
    if (opts.rule == RuleKind::dynamic_safe && aty_active.size() == op.size()) {
      corr_y = aty_active;
    } else if (gram_mode) {
      gather_from_full(aty_full, corr_y);
    } else {
      corr_y = op.apply_adjoint(y);
    }
    double denom_plain = 0.0, denom_stable = 0.0;
    const Vector& eps = op.eps();
    for (Index j = 0; j < corr_y.size(); ++j) {
      const double ac = std::abs(corr_y(j)) / lambda;
      denom_plain = std::max(denom_plain, ac);
      denom_stable = std::max(denom_stable, ac + eps(j) * y_norm / lambda);
    }
    d.scale_prime = 1.0 / (lambda * std::max(1.0, denom_stable));
    d.scale_tilde = 1.0 / (lambda * std::max(1.0, denom_plain));
    return d;
  }

  // D(s * ray) = 0.5 ||y||^2 - 0.5 lambda^2 ||s ray - y/lambda||^2
  double dual_of(double scale, const DualScalars& d) const {
    const double dist_sq = scale * scale * d.ray_sq - 2.0 * scale * d.ray_dot_y / lambda +
                           y_sqnorm / (lambda * lambda);
    return 0.5 * y_sqnorm - 0.5 * lambda * lambda * dist_sq;
  }

  SolveResult run() {
    t_start = std::chrono::steady_clock::now();
    const std::int64_t total_atoms = static_cast<std::int64_t>(k);
    bool emitted_warning = false;

    for (std::uint64_t t = 0; t < cfg.max_iterations; ++t) {
      double momentum = 0.0;
      double t_next = t_k;
      if (opts.solver == SolverKind::fista && momentum_ready) {
        t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_k * t_k));
        momentum = (t_k - 1.0) / t_next;
      }

      Products p = compute_products(momentum);
      const double x_l1 = x.lpNorm<1>();
      const double primal = 0.5 * p.rho_x_sq + lambda * x_l1;
      DualScalars ds = dual_scalars(p);
      double gap_prime = primal - dual_of(ds.scale_prime, ds);
      double gap_tilde = primal - dual_of(ds.scale_tilde, ds);
      if (gap_prime < kGapRoundoffFloor || gap_tilde < kGapRoundoffFloor) emitted_warning = true;
      gap_prime = std::max(gap_prime, 0.0);
      gap_tilde = std::max(gap_tilde, 0.0);

      const bool exact_phase = dict_index == last;
      const bool stop_now = exact_phase && gap_tilde <= cfg.tolerance;
      const bool screen_now = !stop_now && opts.variant != Variant::plain &&
                              (t % static_cast<std::uint64_t>(cfg.screening_interval) == 0);

      const int active_before = static_cast<int>(op.size());
      double gamma = -1.0;
      int next_dict = dict_index;
      bool speed_switch = false;
      std::vector<int> kept_local;
      bool kept_shrinks = false;

      if (screen_now) {
        // Sphere geometry in scalar form; dots against the center reuse the
        // iteration's correlations.
        double radius = 0.0;
        double center_norm = 0.0;
        Vector dots(op.size());
        bool stable_test = true;
        if (opts.rule == RuleKind::gap_safe) {
          const double delta =
              exact_phase ? 0.0
                          : stable_gap_delta(std::sqrt(p.rho_x_sq), op.max_eps(), x_l1);
          radius = std::sqrt(2.0 * gap_prime + 2.0 * delta) / lambda;
          const double s = std::abs(ds.scale_prime);
          center_norm = s * std::sqrt(ds.ray_sq);
          if (ds.ray_is_y) {
            Vector corr_y;
            if (aty_active.size() == op.size()) {
              corr_y = aty_active;
            } else if (gram_mode) {
              gather_from_full(aty_full, corr_y);
            } else {
              corr_y = op.apply_adjoint(y);
            }
            dots = (ds.scale_prime * corr_y).cwiseAbs();
          } else {
            dots = (ds.scale_prime * p.corr).cwiseAbs();
          }
        } else {
          // Dynamic rules: center y/lambda, radius ||theta' - y/lambda||.
          const double s = ds.scale_prime;
          const double dist_sq = s * s * ds.ray_sq - 2.0 * s * ds.ray_dot_y / lambda +
                                 y_sqnorm / (lambda * lambda);
          radius = std::sqrt(std::max(dist_sq, 0.0));
          center_norm = y_norm / lambda;
          if (cfg.precompute_aty && aty_exact_active.size() == op.size()) {
            dots = (aty_exact_active / lambda).cwiseAbs();
            stable_test = false;  // conventional test on exact atoms
          } else {
            dots = (aty_active / lambda).cwiseAbs();
          }
        }

        ScreenResult sr;
        if (stable_test) {
          sr = screen_precomputed(dots, op.eps(), op.exact_norms(), op.approx_norms(),
                                  center_norm, radius);
        } else {
          sr.kept.reserve(static_cast<size_t>(op.size()));
          for (Index j = 0; j < dots.size(); ++j) {
            if (sphere_test(dots(j), op.exact_norms()(j), radius) >= 1.0) {
              sr.kept.push_back(static_cast<int>(j));
            }
          }
          sr.lookahead_count = static_cast<int>(sr.kept.size());
        }
        kept_local = std::move(sr.kept);
        kept_shrinks = static_cast<Index>(kept_local.size()) < op.size();

        if (opts.observer) {
          fire_observer(t, p, ds, radius, kept_local);
        }

        if (!exact_phase) {
          gamma = gap_ratio(gap_tilde, gap_prime);
          if (opts.variant == Variant::multi_dict) {
            const double rc = seq.dicts[static_cast<size_t>(dict_index)].relative_complexity;
            next_dict = switch_dictionary(dict_index, last, gamma, cfg.gamma_threshold,
                                          sr.lookahead_count, rc, total_atoms);
            speed_switch = static_cast<double>(sr.lookahead_count) <=
                           rc * static_cast<double>(total_atoms);
          }
        }
      }

      int x_nnz;
      if (stop_now) {
        x_nnz = count_nonzeros(x);
      } else {
        // Proximal step at the gradient point.
        Vector g = x;
        if (momentum != 0.0) g = (1.0 + momentum) * x - momentum * x_prev;
        Vector x_next(op.size());
        const double thresh = lambda * inv_l;
        for (Index j = 0; j < op.size(); ++j) {
          x_next(j) = soft_threshold(g(j) + inv_l * p.corr(j), thresh);
        }

        if (opts.solver == SolverKind::fista) {
          if (momentum_ready) t_k = t_next;
          x_prev = x;
          if (!gram_mode) {
            v = u;
          } else {
            gv = gx;
          }
          momentum_ready = true;
        }
        x = std::move(x_next);

        if (kept_shrinks) apply_restriction(kept_local);

        // Fresh product of the (restricted) new iterate.
        if (gram_mode) {
          gx = gram_product(x);
        } else {
          u = op.apply(x);
        }
        x_nnz = count_nonzeros(x);

        if (static_cast<Index>(op.size()) * 2 <= active_at_last_l && op.size() > 0 &&
            next_dict == dict_index) {
          lipschitz = restricted_lipschitz();
          inv_l = 1.0 / lipschitz;
          active_at_last_l = op.size();
        }
      }

      ledger += row_flops(dict_index, active_before, x_nnz);
      if (opts.collect_trace) {
        TraceRow row;
        row.iter = t;
        row.dict_index = dict_index;
        row.active_size = active_before;
        row.gap = exact_phase ? gap_tilde : -1.0;
        row.gamma = gamma;
        row.flops_cum = ledger;
        row.wall_ms = elapsed_ms();
        row.x_nnz = x_nnz;
        result.trace.push_back(row);
      }

      if (stop_now) {
        result.converged = true;
        result.final_gap = gap_tilde;
        result.iterations = t + 1;
        finish(emitted_warning);
        return std::move(result);
      }

      if (next_dict != dict_index) {
        result.switches.push_back({t, dict_index, next_dict, speed_switch});
        dict_index = next_dict;
        setup_dictionary(false);
      }
    }

    result.converged = false;
    result.iterations = cfg.max_iterations;
    result.final_gap = std::numeric_limits<double>::quiet_NaN();
    finish(emitted_warning);
    return std::move(result);
  }

  std::uint64_t row_flops(int dict, int active, int nnz) const {
    const auto un = static_cast<std::uint64_t>(n);
    const auto uk = static_cast<std::uint64_t>(k);
    const auto ua = static_cast<std::uint64_t>(active);
    const auto uz = static_cast<std::uint64_t>(nnz);
    switch (opts.variant) {
      case Variant::plain:
        return flops_plain(uk, un, uz);
      case Variant::screened:
        return flops_screened(ua, un, uz);
      case Variant::multi_dict:
        if (dict < last) {
          return flops_stable(seq.dicts[static_cast<size_t>(dict)].op->matvec_flops(), un, ua,
                              uz);
        }
        return flops_screened(ua, un, uz);
    }
    return 0;
  }

  void apply_restriction(const std::vector<int>& kept_local) {
    // Correct tracked history products for dropped nonzero coordinates
    // before the coordinates disappear.
    std::vector<char> keep_mask(static_cast<size_t>(op.size()), 0);
    for (int pos : kept_local) keep_mask[static_cast<size_t>(pos)] = 1;

    const bool fix_history = opts.solver == SolverKind::fista && momentum_ready;
    for (Index j = 0; j < op.size(); ++j) {
      if (keep_mask[static_cast<size_t>(j)]) continue;
      const int g = op.active()[static_cast<size_t>(j)];
      if (fix_history && x_prev.size() == op.size() && x_prev(j) != 0.0) {
        if (gram_mode) {
          gv -= x_prev(j) * opts.exact_gram->col(g);
        } else {
          v -= x_prev(j) * op.column_global(g);
        }
      }
    }

    auto gather = [&](Vector& vec) {
      if (vec.size() != op.size()) return;
      Vector next(static_cast<Index>(kept_local.size()));
      for (size_t j = 0; j < kept_local.size(); ++j) next(static_cast<Index>(j)) = vec(kept_local[j]);
      vec = std::move(next);
    };
    gather(x);
    gather(x_prev);
    gather(aty_active);
    gather(aty_exact_active);
    if (lead_vector.size() == op.size()) {
      gather(lead_vector);
    } else {
      lead_vector.resize(0);
    }
    op.restrict_to_local(kept_local);
  }

  void fire_observer(std::uint64_t t, const Products& p, const DualScalars& ds, double radius,
                     const std::vector<int>& kept_local) {
    SafeSphere sphere;
    DualPoints duals;
    const Vector ray = ds.ray_is_y ? y : p.rho_g;
    duals.scale_prime = ds.scale_prime;
    duals.scale_tilde = ds.scale_tilde;
    duals.theta_prime = ds.scale_prime * ray;
    duals.theta_tilde = ds.scale_tilde * ray;
    if (opts.rule == RuleKind::gap_safe) {
      sphere.center = duals.theta_prime;
    } else {
      sphere.center = y / lambda;
    }
    sphere.radius = radius;

    std::vector<int> active_global = op.active();
    std::vector<int> kept_global;
    kept_global.reserve(kept_local.size());
    for (int pos : kept_local) kept_global.push_back(active_global[static_cast<size_t>(pos)]);

    ScreeningEvent ev;
    ev.iter = t;
    ev.dict_index = dict_index;
    ev.sphere = &sphere;
    ev.active_before = &active_global;
    ev.kept = &kept_global;
    ev.duals = &duals;
    ev.dict = &op.base();
    opts.observer(ev);
  }

  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
        .count();
  }

  void finish(bool warned) {
    result.gap_warning = warned;
    result.total_flops = ledger;
    result.final_active = op.active();
    Vector full = Vector::Zero(k);
    for (Index j = 0; j < op.size(); ++j) full(op.active()[static_cast<size_t>(j)]) = x(j);
    result.x = std::move(full);
  }
};

}  // namespace

SolveResult run_lasso(const ApproxSequence& seq, const Vector& y, double lambda,
                      const SwitchConfig& cfg, const RunOptions& opts) {
  seq.validate();
  Engine engine(seq, y, lambda, cfg, opts);
  return engine.run();
}

}  // namespace fastl1
