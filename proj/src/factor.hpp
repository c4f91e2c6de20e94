#pragma once

#include <cstdint>

#include "dataset.hpp"
#include "eig.hpp"
#include "matrix.hpp"
#include "rng.hpp"

namespace fiddle::factor {

/// Diversified projection matrix W (p x rbar): column j is sqrt(lambda_j) v_j
/// of the uncentered pretraining second-moment matrix, ordered by descending
/// eigenvalue.
struct DpMatrix {
  num::Matrix w;                // p x rbar
  std::vector<double> eigvals;  // leading rbar eigenvalues
  std::size_t p = 0;
  std::size_t rbar = 0;
};

/// Estimated factor scores, row i = (1/p) W^T x_i.
struct FactorScores {
  num::Matrix scores;  // n x rbar
};

/// Simulation-only diagnostics against the true loading matrix.
struct DpDiagnostics {
  num::Matrix h;  // (1/p) W^T B_true, rbar x r
  double nu_min = 0.0;
  double nu_max = 0.0;
  double w_max_abs = 0.0;
};

/// Pretraining covariates held out from estimation. Estimation rows keep
/// their original relative order.
struct SplitDataset {
  num::Matrix pretrain_x;  // m x p, unlabeled
  Dataset estimation;      // remaining n - m rows
  std::vector<std::size_t> pretrain_indices;
};

/// Uniformly random m-subset held out for pretraining; 1 <= m < n.
SplitDataset split_pretrain(const Dataset& data, std::size_t m, num::SeededRng& rng);

/// Eq-style construction from the uncentered covariance (1/m) sum x x^T,
/// through the Gram matrix when p > m and the dense p x p path otherwise.
DpMatrix build_dp_matrix(const num::Matrix& pretrain_x, std::size_t rbar);

FactorScores extract_factors(const DpMatrix& dp, const num::Matrix& x);

/// H = (1/p) W^T B_true with its extreme singular values (via the
/// eigendecomposition of H^T H) and max |W| for the boundedness check.
DpDiagnostics dp_diagnostics(const DpMatrix& dp, const num::Matrix& b_true);

}  // namespace fiddle::factor
