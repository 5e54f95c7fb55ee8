#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <stdexcept>

#include "skewlbd/pencil.hpp"

namespace skewlbd {

/// Upper-bidiagonal projection matrix G_j: alphas on the diagonal, betas on
/// the superdiagonal.  betas has one entry per step; the last one is the
/// trailing coupling scalar beta_j, which sits outside the square G_j.
struct BidiagonalFactor {
  Vector alphas;  // alpha_1 .. alpha_j
  Vector betas;   // beta_1 .. beta_j (betas[j-1] = trailing coupling)

  Index steps() const { return alphas.size(); }

  /// Square j-by-j matrix G_j.
  Matrix to_dense() const {
    const Index j = steps();
    Matrix g = Matrix::Zero(j, j);
    for (Index i = 0; i < j; ++i) {
      g(i, i) = alphas(i);
      if (i + 1 < j) g(i, i + 1) = betas(i);
    }
    return g;
  }

  /// Augmented j-by-(j+1) matrix [G_j, beta_j e_j], the factor a process
  /// terminated by a left-side breakdown leaves behind.
  Matrix to_dense_augmented() const {
    const Index j = steps();
    Matrix g = Matrix::Zero(j, j + 1);
    g.topLeftCorner(j, j) = to_dense();
    g(j - 1, j) = betas(j - 1);
    return g;
  }

  double largest_singular_value() const {
    if (steps() == 0) return 0.0;
    return to_dense().jacobiSvd().singularValues()(0);
  }
};

}  // namespace skewlbd
