#pragma once

#include <cstddef>

#include "matrix.hpp"

namespace fiddle::num {

/// Leading eigenpairs of a symmetric PSD-ish matrix, eigenvalues sorted
/// descending and clamped to >= 0 (tiny negatives in [-1e-10, 0) are rounded
/// up). Eigenvectors are orthonormal columns of `vectors`; each vector's
/// largest-magnitude entry is made nonnegative so results are deterministic.
struct EigenPairs {
  std::vector<double> values;
  Matrix vectors;  // dim x k, column j pairs with values[j]
  /// Set when a requested eigenvector could not be formed (zero eigenvalue on
  /// the Gram path); the affected columns are zero.
  bool rank_deficient = false;
};

/// Top-k eigenpairs of a symmetric k x k matrix via cyclic Jacobi sweeps.
/// Input must be symmetric within 1e-10 relative and finite.
EigenPairs sym_eig_topk(const Matrix& s, std::size_t topk);

/// Top-k eigenpairs of the p x p second-moment matrix (1/m) X^T X, computed
/// through the m x m Gram matrix (1/m) X X^T: eigenvalues are shared and
/// eigenvectors are v = X^T w / ||X^T w|| for Gram eigenvectors w.
EigenPairs gram_topk(const Matrix& x, std::size_t topk);

}  // namespace fiddle::num
