#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "skewlbd/pencil.hpp"

namespace skewlbd {

/// n-by-n s.p.d. tridiagonal Toeplitz matrix with diagonal rho and
/// off-diagonals delta.  Eigenvalues are rho + 2*delta*cos(k*pi/(n+1)).
inline SpMatrix gen_toeplitz_spd(Index n, double rho, double delta) {
  if (n <= 0) throw std::invalid_argument("gen_toeplitz_spd: n must be positive");
  if (!(rho > 2.0 * delta) || !(delta > 0.0))
    throw std::invalid_argument("gen_toeplitz_spd: requires rho > 2*delta > 0 for positive definiteness");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(3 * n));
  for (Index i = 0; i < n; ++i) {
    trip.emplace_back(i, i, rho);
    if (i + 1 < n) {
      trip.emplace_back(i, i + 1, delta);
      trip.emplace_back(i + 1, i, delta);
    }
  }
  SpMatrix m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

/// n-by-n skew-symmetric tridiagonal matrix with +upsilon above and
/// -upsilon below the diagonal.
inline SpMatrix gen_skew_tridiag(Index n, double upsilon) {
  if (n <= 0) throw std::invalid_argument("gen_skew_tridiag: n must be positive");
  if (upsilon == 0.0) throw std::invalid_argument("gen_skew_tridiag: upsilon must be nonzero");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(2 * n));
  for (Index i = 0; i + 1 < n; ++i) {
    trip.emplace_back(i, i + 1, upsilon);
    trip.emplace_back(i + 1, i, -upsilon);
  }
  SpMatrix m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

namespace detail {

/// Kronecker sum I (x) I (x) G1 + I (x) G2 (x) I + G3 (x) I (x) I of three
/// j-by-j matrices, assembled directly (each term acts on one index of the
/// flattened cube).
inline SpMatrix kron_sum3(const SpMatrix& g1, const SpMatrix& g2, const SpMatrix& g3) {
  const Index j = g1.rows();
  const Index n = j * j * j;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(3 * n * 3));
  auto add_term = [&](const SpMatrix& g, Index stride, Index outer, Index inner) {
    // index = a*stride_a + r*stride + c_in; g couples positions along `stride`
    for (Index col = 0; col < j; ++col)
      for (SpMatrix::InnerIterator it(g, col); it; ++it)
        for (Index a = 0; a < outer; ++a)
          for (Index b = 0; b < inner; ++b) {
            Index row_idx = a * (j * stride) + it.row() * stride + b;
            Index col_idx = a * (j * stride) + it.col() * stride + b;
            trip.emplace_back(row_idx, col_idx, it.value());
          }
  };
  add_term(g1, 1, j * j, 1);   // I (x) I (x) G1
  add_term(g2, j, j, j);       // I (x) G2 (x) I
  add_term(g3, j * j, 1, j * j);  // G3 (x) I (x) I
  SpMatrix m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

}  // namespace detail

/// j^3-dimensional pencil with A the Kronecker sum of skew tridiagonals
/// S_j(upsilon_i) and B the Kronecker sum of Toeplitz T_j(rho, delta).
inline SparsePencil gen_kron_sum_pencil(Index j, const std::array<double, 3>& upsilons, double rho,
                                        double delta) {
  if (j < 2) throw std::invalid_argument("gen_kron_sum_pencil: j must be >= 2");
  SpMatrix t = gen_toeplitz_spd(j, rho, delta);
  SpMatrix a = detail::kron_sum3(gen_skew_tridiag(j, upsilons[0]), gen_skew_tridiag(j, upsilons[1]),
                                 gen_skew_tridiag(j, upsilons[2]));
  SpMatrix b = detail::kron_sum3(t, t, t);
  return SparsePencil(std::move(a), std::move(b));
}

/// Condition number of the Kronecker-sum B above, in closed form.
inline double kron_sum_cond_b(Index j, double rho, double delta) {
  double c = std::cos(M_PI / static_cast<double>(j + 1));
  return (3.0 * rho + 6.0 * delta * c) / (3.0 * rho - 6.0 * delta * c);
}

/// Splits a square matrix C into its skew part A = (C - C')/2 and symmetric
/// part B = (C + C')/2; B must be positive definite.
inline SparsePencil split_pencil(const SpMatrix& c_matrix) {
  if (c_matrix.rows() != c_matrix.cols())
    throw std::invalid_argument("split_pencil: matrix must be square");
  SpMatrix ct = SpMatrix(c_matrix.transpose());
  SpMatrix a = ((c_matrix - ct) * 0.5).pruned();
  SpMatrix b = (c_matrix + ct) * 0.5;
  try {
    return SparsePencil(std::move(a), std::move(b));
  } catch (const std::runtime_error&) {
    throw std::runtime_error("split_pencil: symmetric part not positive definite");
  }
}

}  // namespace skewlbd
