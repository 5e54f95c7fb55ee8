#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "skewlbd/pencil.hpp"

namespace skewlbd {

/// Full real spectral data of a dense pencil (A, B): generalized spectral
/// values sigma_1 > ... > sigma_l > 0 and, per conjugate pair, the 2-column
/// basis X_j = [u_j, v_j] with B-orthonormal columns satisfying
/// A u = -sigma B v and A v = sigma B u.
struct DenseSpectrum {
  std::vector<double> sigmas;
  std::vector<Matrix> bases;  // one n-by-2 block per conjugate pair
  Index null_dim = 0;
};

namespace detail {

/// Symmetric positive definite square root via eigendecomposition.
inline Matrix spd_sqrt(const Matrix& b) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(b);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("spd_sqrt: matrix is not positive definite");
  return es.operatorSqrt();
}

}  // namespace detail

/// Brute-force dense reference solver.  Forms the congruent skew-symmetric
/// H' = L^{-1} A L^{-T} from a Cholesky factor of B, eigendecomposes the
/// symmetric -H'^2, pairs each two-dimensional eigenspace into a spectral
/// triplet, and maps back through L^{-T}.
inline DenseSpectrum dense_pencil_spectrum(const Matrix& a, const Matrix& b) {
  const Index n = a.rows();
  if (a.cols() != n || b.rows() != n || b.cols() != n)
    throw std::invalid_argument("dense_pencil_spectrum: matrices must be square and of equal size");
  Eigen::LLT<Matrix> llt(b);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("dense_pencil_spectrum: B is not positive definite");
  Matrix l = llt.matrixL();
  Matrix h = l.triangularView<Eigen::Lower>().solve(a);
  h = l.triangularView<Eigen::Lower>().solve(Matrix(h.transpose())).transpose();
  h = 0.5 * (h - h.transpose().eval());  // restore exact skewness lost to roundoff

  Matrix k = -h * h;
  k = 0.5 * (k + k.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Matrix> es(k);

  DenseSpectrum spec;
  const double sigma_max = std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0));
  const double null_cut = 1e-10 * sigma_max;

  // Walk eigenvalues in descending order.  Each conjugate pair occupies a
  // two-dimensional eigenspace of -H'^2; the partner of an already formed
  // pair projects to ~0 and is skipped.  Only eigenvectors within a cluster
  // can overlap, so the projection runs over same-sigma pairs alone.
  // Sigma itself is refined as ||H'z||: the squared form loses half the
  // digits near the null space.
  std::vector<Vector> used_w, used_z;
  std::vector<double> used_sigma;
  for (Index idx = n - 1; idx >= 0; --idx) {
    double sigma_rough = std::sqrt(std::max(es.eigenvalues()(idx), 0.0));
    Vector z = es.eigenvectors().col(idx);
    for (std::size_t p = 0; p < used_sigma.size(); ++p) {
      if (std::abs(used_sigma[p] - sigma_rough) > 1e-8 * std::max(sigma_max, 1.0)) continue;
      z -= used_w[p].dot(z) * used_w[p];
      z -= used_z[p].dot(z) * used_z[p];
    }
    double zn = z.norm();
    if (zn < 0.5) continue;  // partner of an existing pair
    z /= zn;
    Vector hz = h * z;
    double sigma = hz.norm();
    if (sigma <= null_cut) {
      ++spec.null_dim;
      continue;
    }
    Vector w = hz / sigma;
    used_w.push_back(w);
    used_z.push_back(z);
    used_sigma.push_back(sigma);

    Matrix x(n, 2);
    x.col(0) = l.transpose().triangularView<Eigen::Upper>().solve(w);  // u
    x.col(1) = l.transpose().triangularView<Eigen::Upper>().solve(z);  // v
    spec.sigmas.push_back(sigma);
    spec.bases.push_back(std::move(x));
  }
  return spec;
}

/// Sines of the B-canonical angles between span(w_basis) and span(z_basis),
/// descending.  Angle count is the smaller of the two dimensions.
inline std::vector<double> sin_b_angles(const Matrix& w_basis, const Matrix& z_basis, const Matrix& b) {
  Matrix w = w_basis, z = z_basis;
  if (w.cols() > z.cols()) std::swap(w, z);  // measure the smaller against the larger
  Matrix m = detail::spd_sqrt(b);
  auto orthonormalize = [&](const Matrix& x) {
    Eigen::HouseholderQR<Matrix> qr(m * x);
    Matrix q = qr.householderQ() * Matrix::Identity(x.rows(), x.cols());
    Matrix r = qr.matrixQR().topLeftCorner(x.cols(), x.cols()).triangularView<Eigen::Upper>();
    for (Index i = 0; i < x.cols(); ++i)
      if (std::abs(r(i, i)) < 1e-12 * std::abs(r(0, 0)) || r(i, i) == 0.0)
        throw std::invalid_argument("sin_b_angles: rank-deficient basis");
    return q;
  };
  Matrix zq = orthonormalize(z);  // larger subspace
  Matrix wq = orthonormalize(w);
  Matrix resid = wq - zq * (zq.transpose() * wq);
  Eigen::JacobiSVD<Matrix> svd(resid);
  std::vector<double> sines(svd.singularValues().data(),
                            svd.singularValues().data() + svd.singularValues().size());
  for (double& s : sines) s = std::min(s, 1.0);
  return sines;
}

/// Frobenius norm of the sines vector.
inline double sin_b_frobenius(const Matrix& w_basis, const Matrix& z_basis, const Matrix& b) {
  double sum = 0.0;
  for (double s : sin_b_angles(w_basis, z_basis, b)) sum += s * s;
  return std::sqrt(sum);
}

/// Frobenius norm of the tangents of the B-canonical angles.
inline double tan_b_frobenius(const Matrix& w_basis, const Matrix& z_basis, const Matrix& b) {
  double sum = 0.0;
  for (double s : sin_b_angles(w_basis, z_basis, b)) {
    double c2 = std::max(1.0 - s * s, 0.0);
    if (c2 == 0.0) return std::numeric_limits<double>::infinity();
    sum += s * s / c2;
  }
  return std::sqrt(sum);
}

enum class Which { largest, smallest };

/// Spectral separation ratio governing the Chebyshev convergence rate
/// toward the k extreme target eigenspaces.
inline double gap_metric(const std::vector<double>& sigmas, int k, Which which) {
  const int l = static_cast<int>(sigmas.size());
  if (l <= k) throw std::invalid_argument("gap_metric: requires more spectral values than k");
  auto sq = [&](int i) { return sigmas[static_cast<std::size_t>(i)] * sigmas[static_cast<std::size_t>(i)]; };
  double gap = std::numeric_limits<double>::infinity();
  for (int j = 1; j <= k; ++j) {
    double num, den;
    if (which == Which::largest) {
      num = sq(j - 1) - sq(j);
      den = sq(j) - sq(l - 1);
    } else {
      num = sq(l - j - 1) - sq(l - j);
      den = sq(0) - sq(l - j - 1);
    }
    double r = (den == 0.0) ? std::numeric_limits<double>::infinity() : num / den;
    gap = std::min(gap, r);
  }
  return gap;
}

namespace detail {

inline double chebyshev(int degree, double x) {
  // stable evaluation for x >= 1
  return std::cosh(static_cast<double>(degree) * std::acosh(x));
}

}  // namespace detail

/// A-priori Chebyshev decay bound on the tangent of the B-angle between the
/// j-th target eigenspace and the step-m Krylov pair, given the tangent at
/// the starting subspace.  j and m are 1-based with 1 <= j <= m < l.
inline double chebyshev_bound(const std::vector<double>& sigmas, int j, int m, double initial_tangent,
                              Which which = Which::largest) {
  const int l = static_cast<int>(sigmas.size());
  if (j < 1 || j > m || m >= l) throw std::invalid_argument("chebyshev_bound: requires 1 <= j <= m < l");
  auto sq = [&](int i1) {  // 1-based access to sigma^2
    return sigmas[static_cast<std::size_t>(i1 - 1)] * sigmas[static_cast<std::size_t>(i1 - 1)];
  };
  double xi, eta = 1.0;
  if (which == Which::largest) {
    xi = 1.0 + 2.0 * (sq(j) - sq(j + 1)) / (sq(j + 1) - sq(l));
    for (int i = 1; i < j; ++i) eta *= (sq(i) - sq(l)) / (sq(i) - sq(j));
  } else {
    xi = 1.0 + 2.0 * (sq(l - j + 1) - sq(l - j)) / (sq(l - j) - sq(1));
    for (int i = 1; i < j; ++i) eta *= (sq(l - i + 1) - sq(1)) / (sq(l - i + 1) - sq(l - j + 1));
  }
  if (!(xi > 1.0)) throw std::invalid_argument("chebyshev_bound: degenerate spectrum gives xi <= 1");
  return eta / detail::chebyshev(m - j, xi) * initial_tangent;
}

}  // namespace skewlbd
