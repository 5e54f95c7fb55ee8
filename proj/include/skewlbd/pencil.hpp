#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <atomic>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <utility>

namespace skewlbd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SpMatrix = Eigen::SparseMatrix<double>;
using Index = Eigen::Index;

inline constexpr double kEps = 2.220446049250313e-16;

/// Tallies of operator applications.  The #Mv figure reported by the solver
/// is apply_a + solve_b; apply_b is tracked separately.
struct OpCounters {
  std::atomic<std::int64_t> apply_a{0};
  std::atomic<std::int64_t> apply_b{0};
  std::atomic<std::int64_t> solve_b{0};

  std::int64_t mv() const { return apply_a.load() + solve_b.load(); }
  void reset() { apply_a = 0; apply_b = 0; solve_b = 0; }
};

/// Matrix-free access to a pencil (A, B) with A skew-symmetric and B
/// symmetric positive definite.  This is the only interface the solver
/// touches; any backing (sparse matrices, stencils, custom solves) works.
///
/// Counters are shared between copies of the same operator and are safe to
/// bump from concurrent read-only solves.
class PencilOperator {
 public:
  using ApplyFn = std::function<void(const Vector&, Vector&)>;

  PencilOperator(Index n, ApplyFn apply_a, ApplyFn apply_b, ApplyFn solve_b)
      : n_(n),
        a_(std::move(apply_a)),
        b_(std::move(apply_b)),
        binv_(std::move(solve_b)),
        counters_(std::make_shared<OpCounters>()) {
    if (n_ <= 0) throw std::invalid_argument("pencil dimension must be positive");
  }

  Index dim() const { return n_; }

  Vector apply_a(const Vector& v) const {
    check_dim(v);
    Vector out(n_);
    a_(v, out);
    counters_->apply_a.fetch_add(1, std::memory_order_relaxed);
    return out;
  }

  Vector apply_b(const Vector& v) const {
    check_dim(v);
    Vector out(n_);
    b_(v, out);
    counters_->apply_b.fetch_add(1, std::memory_order_relaxed);
    return out;
  }

  Vector solve_b(const Vector& v) const {
    check_dim(v);
    Vector out(n_);
    binv_(v, out);
    counters_->solve_b.fetch_add(1, std::memory_order_relaxed);
    return out;
  }

  const OpCounters& counters() const { return *counters_; }
  void reset_counters() const { counters_->reset(); }

 private:
  void check_dim(const Vector& v) const {
    if (v.size() != n_) throw std::invalid_argument("vector length does not match pencil dimension");
  }

  Index n_;
  ApplyFn a_, b_, binv_;
  std::shared_ptr<OpCounters> counters_;
};

/// B-inner product x' * (B y).  Costs one apply_b.
inline double b_inner(const Vector& x, const Vector& y, const PencilOperator& pencil) {
  if (x.size() != pencil.dim() || y.size() != pencil.dim())
    throw std::invalid_argument("b_inner: dimension mismatch");
  return x.dot(pencil.apply_b(y));
}

/// B-norm; clamped at zero to guard roundoff on near-null vectors.
inline double b_norm(const Vector& x, const PencilOperator& pencil) {
  return std::sqrt(std::max(b_inner(x, x, pencil), 0.0));
}

/// Sparse pencil backing a PencilOperator.  B is factorized once at
/// construction (sparse Cholesky); solve_b applies the factor.
class SparsePencil {
 public:
  SparsePencil(SpMatrix a, SpMatrix b) : a_(std::move(a)), b_(std::move(b)) {
    if (a_.rows() != a_.cols() || b_.rows() != b_.cols() || a_.rows() != b_.rows())
      throw std::invalid_argument("pencil matrices must be square and of equal size");
    a_.makeCompressed();
    b_.makeCompressed();
    SpMatrix at = SpMatrix(a_.transpose());
    if ((a_ + at).norm() != 0.0)
      throw std::invalid_argument("A is not antisymmetric in its stored pattern");
    SpMatrix bt = SpMatrix(b_.transpose());
    if ((b_ - bt).norm() != 0.0)
      throw std::invalid_argument("B is not symmetric in its stored pattern");
    llt_.compute(b_);
    if (llt_.info() != Eigen::Success)
      throw std::runtime_error("sparse Cholesky failed: B is not positive definite");
  }

  Index dim() const { return a_.rows(); }
  const SpMatrix& a() const { return a_; }
  const SpMatrix& b() const { return b_; }

  /// Operator view.  The pencil must outlive the returned handle.
  PencilOperator op() const& {
    const SparsePencil* self = this;
    return PencilOperator(
        dim(), [self](const Vector& v, Vector& out) { out.noalias() = self->a_ * v; },
        [self](const Vector& v, Vector& out) { out.noalias() = self->b_ * v; },
        [self](const Vector& v, Vector& out) { out = self->llt_.solve(v); });
  }
  PencilOperator op() const&& = delete;

 private:
  SpMatrix a_, b_;
  Eigen::SimplicialLLT<SpMatrix> llt_;
};

/// Spectral-scale estimates used by the convergence test and the
/// reorthogonalization roundoff unit.
struct NormEstimates {
  double norm_b = 0.0;   // estimate of ||B||
  double cond_b = 1.0;   // estimate of kappa(B)
  double norm_h = 0.0;   // ||H|| estimate; populated by the solver from Ritz values
  int m_l = 0;           // Lanczos steps requested for estimation
  int steps_b = 0;       // steps actually used on B
  int steps_binv = 0;    // steps actually used on B^{-1}
};

namespace detail {

/// Largest eigenvalue of a symmetric operator by a short Lanczos run with
/// full reorthogonalization, started from the normalized all-ones vector.
/// Returns the estimate and the number of steps taken (early termination on
/// an exact invariant subspace).
template <class Apply>
std::pair<double, int> lanczos_lambda_max(Index n, Apply&& apply, int m_l) {
  if (n <= 0) throw std::invalid_argument("lanczos_lambda_max: degenerate input");
  m_l = static_cast<int>(std::min<Index>(m_l, n));
  Matrix v(n, m_l + 1);
  Eigen::VectorXd diag(m_l), off(m_l);
  v.col(0) = Vector::Ones(n) / std::sqrt(static_cast<double>(n));

  int steps = 0;
  double scale = 0.0;
  for (int i = 0; i < m_l; ++i) {
    Vector w = apply(v.col(i));
    if (i > 0) w -= off(i - 1) * v.col(i - 1);
    diag(i) = v.col(i).dot(w);
    w -= diag(i) * v.col(i);
    // two reorthogonalization passes keep small exact cases exact
    for (int pass = 0; pass < 2; ++pass)
      for (int l = 0; l <= i; ++l) w -= v.col(l).dot(w) * v.col(l);
    ++steps;
    scale = std::max(scale, std::abs(diag(i)) + (i > 0 ? std::abs(off(i - 1)) : 0.0));
    double beta = w.norm();
    off(i) = beta;
    if (beta <= 100.0 * static_cast<double>(n) * kEps * scale) break;
    v.col(i + 1) = w / beta;
  }

  Matrix t = Matrix::Zero(steps, steps);
  for (int i = 0; i < steps; ++i) {
    t(i, i) = diag(i);
    if (i + 1 < steps) t(i, i + 1) = t(i + 1, i) = off(i);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(t);
  return {es.eigenvalues().maxCoeff(), steps};
}

}  // namespace detail

/// Estimates ||B|| and kappa(B) by running an m_l-step Lanczos process on B
/// and on B^{-1}.  norm_h is left unset; the solver fills it from Ritz values.
inline NormEstimates estimate_norms(const PencilOperator& pencil, int m_l = 30) {
  if (m_l < 1) throw std::invalid_argument("estimate_norms: m_l must be >= 1");
  NormEstimates est;
  est.m_l = m_l;
  auto [lmax_b, sb] =
      detail::lanczos_lambda_max(pencil.dim(), [&](const Vector& v) { return pencil.apply_b(v); }, m_l);
  auto [lmax_binv, si] =
      detail::lanczos_lambda_max(pencil.dim(), [&](const Vector& v) { return pencil.solve_b(v); }, m_l);
  est.steps_b = sb;
  est.steps_binv = si;
  est.norm_b = lmax_b;
  est.cond_b = std::max(lmax_b * lmax_binv, 1.0);
  return est;
}

}  // namespace skewlbd
