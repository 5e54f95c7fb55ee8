#pragma once

#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "skewlbd/oracle.hpp"
#include "skewlbd/process.hpp"

namespace skewlbd {

/// Singular triplet (theta, c, d) of the bidiagonal factor with the cheap
/// residual norm of the conjugate eigenpair approximations it encodes.
struct RitzTriplet {
  double theta = 0.0;
  Vector c;  // left singular vector of G
  Vector d;  // right singular vector
  double residual_norm = -1.0;  // unset until residual_norms()
  int rank = 0;                 // position in descending theta order
};

/// Reconstructed conjugate approximate eigenpair: eigenvalues +-i*theta with
/// eigenvectors (u +- i v)/sqrt(2), stored as real data.
struct EigenPair {
  double theta = 0.0;
  Vector u, v;
  double residual_norm = -1.0;
};

namespace detail {

inline std::vector<RitzTriplet> svd_triplets(const Matrix& g) {
  Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Index r = std::min(g.rows(), g.cols());
  std::vector<RitzTriplet> out(static_cast<std::size_t>(r));
  for (Index i = 0; i < r; ++i) {
    RitzTriplet& t = out[static_cast<std::size_t>(i)];
    t.theta = svd.singularValues()(i);
    t.c = svd.matrixU().col(i);
    t.d = svd.matrixV().col(i);
    t.rank = static_cast<int>(i);
    // deterministic sign: largest-magnitude entry of d made positive
    Index imax = 0;
    t.d.cwiseAbs().maxCoeff(&imax);
    if (t.d(imax) < 0.0) {
      t.d = -t.d;
      t.c = -t.c;
    }
  }
  return out;
}

}  // namespace detail

/// Full SVD of the square bidiagonal G_j, singular values descending.
inline std::vector<RitzTriplet> extract(const BidiagonalFactor& factor) {
  if (factor.steps() < 1) throw std::invalid_argument("extract: empty factor");
  return detail::svd_triplets(factor.to_dense());
}

/// SVD of the augmented factor [G_j, beta_j e_j] left behind by a left-side
/// breakdown; its j singular triplets are exact (c has length j, d length
/// j+1).
inline std::vector<RitzTriplet> extract_augmented(const BidiagonalFactor& factor) {
  if (factor.steps() < 1) throw std::invalid_argument("extract_augmented: empty factor");
  return detail::svd_triplets(factor.to_dense_augmented());
}

/// Sets each residual_norm to beta_m * |last entry of c| * ||B q_{m+1}|| / sqrt(2).
/// At breakdown (beta_m = 0) every residual is exactly zero.
inline void residual_norms(const LanczosState& state, std::vector<RitzTriplet>& triplets) {
  const int m = state.steps();
  if (m < 1) throw std::invalid_argument("residual_norms: no completed steps");
  const double beta_m = state.beta(m);
  const double bq_norm = (beta_m == 0.0) ? 0.0 : state.trailing_bq_norm();
  for (RitzTriplet& t : triplets) {
    const double cm = std::abs(t.c(t.c.size() - 1));
    t.residual_norm = beta_m * cm * bq_norm / std::sqrt(2.0);
  }
}

/// Residual norm sqrt(||r_R||^2 + ||r_I||^2) with r_R = (A u + theta B v)/sqrt(2)
/// and r_I = (A v - theta B u)/sqrt(2), computed directly (two A-applies, two
/// B-applies).  Validation only.
inline double direct_residual(const PencilOperator& pencil, const EigenPair& pair) {
  if (pair.theta == 0.0 && pair.u.size() == 0) return 0.0;
  Vector rr = (pencil.apply_a(pair.u) + pair.theta * pencil.apply_b(pair.v)) / std::sqrt(2.0);
  Vector ri = (pencil.apply_a(pair.v) - pair.theta * pencil.apply_b(pair.u)) / std::sqrt(2.0);
  return std::sqrt(rr.squaredNorm() + ri.squaredNorm());
}

struct ConvergenceResult {
  bool converged = false;
  std::vector<int> selected;  // 0-based indices into the triplet list
};

/// All-of-J convergence test against the threshold sqrt(||B||_e) ||H||_e tol.
/// J = {1..k} for the largest pairs, {m-k+1..m} for the smallest.
inline ConvergenceResult check_convergence(const std::vector<RitzTriplet>& triplets, Which which, int k,
                                           double norm_b_e, double norm_h_e, double tol) {
  const int m = static_cast<int>(triplets.size());
  if (k > m) throw std::invalid_argument("check_convergence: k exceeds number of triplets");
  ConvergenceResult res;
  res.converged = true;
  const double threshold = std::sqrt(norm_b_e) * norm_h_e * tol;
  for (int i = 0; i < k; ++i) {
    int idx = (which == Which::largest) ? i : m - k + i;
    res.selected.push_back(idx);
    const RitzTriplet& t = triplets[static_cast<std::size_t>(idx)];
    if (t.residual_norm < 0.0) throw std::invalid_argument("check_convergence: residuals unset");
    if (!(t.residual_norm <= threshold)) res.converged = false;
  }
  return res;
}

/// Lifts selected triplets to eigenpairs u = P c, v = Q d.  The lifted
/// vectors are B-normalized explicitly (the bases are only semi-B-orthogonal
/// in finite precision).
inline std::vector<EigenPair> form_eigenpairs(const LanczosState& state,
                                              const std::vector<RitzTriplet>& triplets,
                                              const std::vector<int>& selected) {
  std::vector<EigenPair> out;
  out.reserve(selected.size());
  for (int idx : selected) {
    const RitzTriplet& t = triplets.at(static_cast<std::size_t>(idx));
    EigenPair pair;
    pair.theta = t.theta;
    pair.residual_norm = t.residual_norm;
    const int lc = static_cast<int>(t.c.size());
    const int ld = static_cast<int>(t.d.size());
    pair.u = state.p_block(lc) * t.c;
    pair.v = state.q_block(ld) * t.d;
    Vector bu = state.bp_block(lc) * t.c;
    Vector bv = state.bq_block(ld) * t.d;
    double nu = std::sqrt(std::max(pair.u.dot(bu), 0.0));
    double nv = std::sqrt(std::max(pair.v.dot(bv), 0.0));
    if (nu > 0.0) pair.u /= nu;
    if (nv > 0.0) pair.v /= nv;
    out.push_back(std::move(pair));
  }
  return out;
}

}  // namespace skewlbd
