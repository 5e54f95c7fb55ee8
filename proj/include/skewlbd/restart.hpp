#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "skewlbd/process.hpp"
#include "skewlbd/ritz.hpp"

namespace skewlbd {

/// Accumulated orthogonal factors of the implicit-restart sweeps:
/// g_tilde = c_tilde' * G * d_tilde, upper bidiagonal with nonnegative
/// entries; both factors have lower bandwidth at most (number of shifts).
struct RestartRotations {
  Matrix c_tilde;
  Matrix d_tilde;
  Matrix g_tilde;
};

/// Shift selection with bad-shift replacement.  For the largest pairs the
/// unwanted Ritz values theta_{k+1}..theta_m are used; a shift within
/// theta_k * 1e-3 of (theta_k - ||r_k||) is reset to zero.  For the smallest
/// pairs the shifts are theta_1..theta_{m-k}; a shift within
/// theta_{m-k+1} * 1e-3 of (theta_{m-k+1} + ||r_{m-k+1}||) is reset to
/// theta_1.
inline std::vector<double> select_shifts(const std::vector<RitzTriplet>& triplets, Which which, int k,
                                         int m) {
  if (k >= m) throw std::invalid_argument("select_shifts: requires k < m");
  if (static_cast<int>(triplets.size()) < m) throw std::invalid_argument("select_shifts: too few triplets");
  std::vector<double> shifts;
  shifts.reserve(static_cast<std::size_t>(m - k));
  if (which == Which::largest) {
    const RitzTriplet& guard = triplets[static_cast<std::size_t>(k - 1)];
    const double ref = guard.theta - guard.residual_norm;
    for (int i = k; i < m; ++i) {
      double mu = triplets[static_cast<std::size_t>(i)].theta;
      if (std::abs(ref - mu) <= guard.theta * 1e-3) mu = 0.0;
      shifts.push_back(mu);
    }
  } else {
    const RitzTriplet& guard = triplets[static_cast<std::size_t>(m - k)];
    const double ref = guard.theta + guard.residual_norm;
    for (int i = 0; i < m - k; ++i) {
      double mu = triplets[static_cast<std::size_t>(i)].theta;
      if (std::abs(ref - mu) <= guard.theta * 1e-3) mu = triplets[0].theta;
      shifts.push_back(mu);
    }
  }
  return shifts;
}

namespace detail {

struct Givens {
  double c = 1.0, s = 0.0;
};

inline Givens make_givens(double a, double b) {
  if (b == 0.0) return {1.0, 0.0};
  double r = std::hypot(a, b);
  return {a / r, b / r};
}

/// Applies the plane rotation to columns (i, i+1) of m from the right:
/// col_i' = c col_i + s col_{i+1}, col_{i+1}' = -s col_i + c col_{i+1}.
inline void rotate_cols(Matrix& m, int i, const Givens& g) {
  Vector ci = m.col(i);
  m.col(i) = g.c * ci + g.s * m.col(i + 1);
  m.col(i + 1) = -g.s * ci + g.c * m.col(i + 1);
}

/// Applies the plane rotation to rows (i, i+1) of m from the left
/// (premultiplication by the transpose of the same rotation).
inline void rotate_rows(Matrix& m, int i, const Givens& g) {
  Eigen::RowVectorXd ri = m.row(i);
  m.row(i) = g.c * ri + g.s * m.row(i + 1);
  m.row(i + 1) = -g.s * ri + g.c * m.row(i + 1);
}

}  // namespace detail

/// One bulge-chasing sweep per shift mu, seeded by the first column of
/// G'G - mu^2 I, alternating right and left Givens rotations that restore
/// upper-bidiagonal form; equivalent to m-k implicit QR iterations on G'G
/// with shifts mu^2.  Shifts are applied in descending order.  A final
/// two-sided sign pass makes the diagonal and superdiagonal of g_tilde
/// nonnegative.
inline RestartRotations bidiag_implicit_qr(const BidiagonalFactor& factor, std::vector<double> shifts) {
  const int m = static_cast<int>(factor.steps());
  if (m < 2) throw std::invalid_argument("bidiag_implicit_qr: factor must have at least 2 steps");
  if (shifts.empty()) throw std::invalid_argument("bidiag_implicit_qr: no shifts");
  std::sort(shifts.begin(), shifts.end(), std::greater<double>());

  RestartRotations rot;
  rot.c_tilde = Matrix::Identity(m, m);
  rot.d_tilde = Matrix::Identity(m, m);
  Matrix g = factor.to_dense();

  for (double mu : shifts) {
    double y = g(0, 0) * g(0, 0) - mu * mu;
    double z = g(0, 0) * g(0, 1);
    for (int i = 0; i + 1 < m; ++i) {
      auto gr = detail::make_givens(y, z);
      detail::rotate_cols(g, i, gr);
      detail::rotate_cols(rot.d_tilde, i, gr);
      auto gl = detail::make_givens(g(i, i), g(i + 1, i));
      detail::rotate_rows(g, i, gl);
      detail::rotate_cols(rot.c_tilde, i, gl);
      if (i + 2 < m) {
        y = g(i, i + 1);
        z = g(i, i + 2);
      }
    }
    // rotations touch adjacent pairs only; entries outside the bidiagonal
    // band hold pure roundoff after the chase
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c)
        if (c != r && c != r + 1) g(r, c) = 0.0;
  }

  // sign normalization: flip columns of the factors so that g_tilde has a
  // nonnegative diagonal and superdiagonal
  Vector sc = Vector::Ones(m), sd = Vector::Ones(m);
  for (int i = 0; i < m; ++i) {
    sc(i) = detail::sign_or_plus(sd(i) * g(i, i));
    if (i + 1 < m) sd(i + 1) = detail::sign_or_plus(sc(i) * g(i, i + 1));
  }
  for (int i = 0; i < m; ++i) {
    rot.c_tilde.col(i) *= sc(i);
    rot.d_tilde.col(i) *= sd(i);
    g.row(i) *= sc(i);
  }
  for (int i = 0; i < m; ++i) g.col(i) *= sd(i);

  rot.g_tilde = g;
  return rot;
}

/// Scalars produced by truncation that the tracker update needs.
struct TruncateInfo {
  double beta_m = 0.0;        // trailing coupling before restart
  double c_mk = 0.0;          // (m, k) entry of c_tilde
  double beta_tilde_k = 0.0;  // (k, k+1) entry of g_tilde
  double beta_k = 0.0;        // new trailing coupling after truncation
  bool fresh_vector_needed = false;
};

/// Compresses the m-step state to dimension k:
/// q_{k+1} <- (beta_m c_mk q_{m+1} + beta_tilde_k Q_m d_{k+1}) / beta_k,
/// P_k <- P_m C_k, Q_k <- Q_m D_k, G_k <- leading block of g_tilde.
inline TruncateInfo truncate(LanczosState& state, const RestartRotations& rot, int k) {
  const int m = state.steps();
  if (k < 1 || k >= m) throw std::invalid_argument("truncate: requires 1 <= k < m");
  if (rot.c_tilde.rows() != m) throw std::invalid_argument("truncate: rotation size mismatch");

  TruncateInfo info;
  info.beta_m = state.beta(m);
  info.c_mk = rot.c_tilde(m - 1, k - 1);
  info.beta_tilde_k = rot.g_tilde(k - 1, k);

  Matrix new_p = state.p_block(m) * rot.c_tilde.leftCols(k);
  Matrix new_bp = state.bp_block(m) * rot.c_tilde.leftCols(k);
  Matrix new_q(state.pencil().dim(), k + 1);
  Matrix new_bq(state.pencil().dim(), k + 1);
  new_q.leftCols(k) = state.q_block(m) * rot.d_tilde.leftCols(k);
  new_bq.leftCols(k) = state.bq_block(m) * rot.d_tilde.leftCols(k);

  Vector q_next = info.beta_tilde_k * (state.q_block(m) * rot.d_tilde.col(k));
  Vector bq_next = info.beta_tilde_k * (state.bq_block(m) * rot.d_tilde.col(k));
  if (info.beta_m != 0.0) {
    q_next += info.beta_m * info.c_mk * state.q_vec(m + 1);
    bq_next += info.beta_m * info.c_mk * state.bq_vec(m + 1);
  }
  double beta_k = std::sqrt(std::max(q_next.dot(bq_next), 0.0));
  info.beta_k = beta_k;

  Vector new_alpha = rot.g_tilde.diagonal().head(k);
  Vector new_beta = Vector::Zero(k);
  for (int i = 0; i + 1 < k; ++i) new_beta(i) = rot.g_tilde(i, i + 1);
  new_beta(k - 1) = beta_k;

  if (beta_k <= state.breakdown_threshold()) {
    info.fresh_vector_needed = true;
    new_beta(k - 1) = 0.0;
    q_next.setZero();
    bq_next.setZero();
  } else {
    q_next /= beta_k;
    bq_next /= beta_k;
  }
  new_q.col(k) = q_next;
  new_bq.col(k) = bq_next;

  state.install_truncated(new_p, new_bp, new_q, new_bq, new_alpha, new_beta, k);
  return info;
}

/// Rotates the tracker into the truncated geometry:
/// Phi_k' = C_k' Phi_m C_k, Psi_k' = D_k' Psi_m D_k, Omega_k' = C_k' Omega_m D_k,
/// with the (k+1)-th columns of Psi' and Omega' recombined from the old
/// trailing column.  Symmetry is enforced and diagonals reset to one.
inline void update_trackers(OrthoTracker& tracker, const RestartRotations& rot, const TruncateInfo& info,
                            int m, int k) {
  Matrix phi_m = tracker.phi.block(1, 1, m, m);
  Matrix psi_m = tracker.psi.block(1, 1, m, m);
  Matrix omega_m = tracker.omega.block(1, 1, m, m);
  Vector psi_last = tracker.psi.block(1, m + 1, m, 1);
  Vector omega_last = tracker.omega.block(1, m + 1, m, 1);

  const auto& ck = rot.c_tilde.leftCols(k);
  const auto& dk = rot.d_tilde.leftCols(k);
  Matrix phi_new = ck.transpose() * phi_m * ck;
  Matrix psi_new = dk.transpose() * psi_m * dk;
  Matrix omega_new = ck.transpose() * omega_m * dk;
  phi_new = 0.5 * (phi_new + phi_new.transpose().eval());
  psi_new = 0.5 * (psi_new + psi_new.transpose().eval());

  Vector psi_col = Vector::Zero(k), omega_col = Vector::Zero(k);
  if (!info.fresh_vector_needed && info.beta_k > 0.0) {
    Vector comb_psi = info.beta_m * info.c_mk * psi_last + info.beta_tilde_k * (psi_m * rot.d_tilde.col(k));
    Vector comb_omega =
        info.beta_m * info.c_mk * omega_last + info.beta_tilde_k * (omega_m * rot.d_tilde.col(k));
    psi_col = dk.transpose() * comb_psi / info.beta_k;
    omega_col = ck.transpose() * comb_omega / info.beta_k;
  }

  tracker.phi.setZero();
  tracker.psi.setZero();
  tracker.omega.setZero();
  for (int i = 1; i <= tracker.capacity; ++i) tracker.phi(i, i) = 1.0;
  for (int i = 1; i <= tracker.capacity + 1; ++i) tracker.psi(i, i) = 1.0;
  tracker.phi.block(1, 1, k, k) = phi_new;
  tracker.psi.block(1, 1, k, k) = psi_new;
  tracker.omega.block(1, 1, k, k) = omega_new;
  for (int i = 1; i <= k; ++i) {
    tracker.phi(i, i) = 1.0;
    tracker.psi(i, i) = 1.0;
    tracker.psi(i, k + 1) = psi_col(i - 1);
    tracker.psi(k + 1, i) = psi_col(i - 1);
    tracker.omega(i, k + 1) = omega_col(i - 1);
  }
  tracker.psi(k + 1, k + 1) = 1.0;
}

}  // namespace skewlbd
