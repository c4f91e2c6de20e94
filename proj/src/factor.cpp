#include "factor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "error.hpp"

namespace fiddle::factor {

SplitDataset split_pretrain(const Dataset& data, std::size_t m, num::SeededRng& rng) {
  const std::size_t n = data.n();
  require(m >= 1 && m < n, ErrorCode::InvalidArgument,
          "split_pretrain: requires 1 <= m < n");

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);

  std::vector<std::size_t> pre(idx.begin(), idx.begin() + m);
  std::sort(pre.begin(), pre.end());

  SplitDataset out;
  out.pretrain_indices = pre;
  out.pretrain_x = num::Matrix(m, data.p());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < data.p(); ++j)
      out.pretrain_x(i, j) = data.x(pre[i], j);

  std::vector<bool> held(n, false);
  for (std::size_t i : pre) held[i] = true;

  Dataset& est = out.estimation;
  est.x = num::Matrix(n - m, data.p());
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (held[i]) continue;
    est.y.push_back(data.y[i]);
    est.t.push_back(data.t[i]);
    for (std::size_t j = 0; j < data.p(); ++j) est.x(k, j) = data.x(i, j);
    if (data.has_pi_star()) est.pi_star.push_back(data.pi_star[i]);
    if (data.has_outcome_oracles()) {
      est.mu0_star.push_back(data.mu0_star[i]);
      est.mu1_star.push_back(data.mu1_star[i]);
    }
    ++k;
  }
  return out;
}

DpMatrix build_dp_matrix(const num::Matrix& pretrain_x, std::size_t rbar) {
  const std::size_t m = pretrain_x.rows(), p = pretrain_x.cols();
  require(m >= 1 && p >= 1, ErrorCode::InvalidArgument, "build_dp_matrix: empty pretraining data");
  require(rbar >= 1 && rbar <= m, ErrorCode::InvalidArgument,
          "build_dp_matrix: requires 1 <= rbar <= m");
  require(rbar <= p, ErrorCode::InvalidArgument, "build_dp_matrix: rbar exceeds p");

  bool all_zero = true;
  for (double v : pretrain_x.data())
    if (v != 0.0) {
      all_zero = false;
      break;
    }
  require(!all_zero, ErrorCode::DegenerateData, "build_dp_matrix: all-zero pretraining data");

  num::EigenPairs pairs;
  if (p > m) {
    pairs = num::gram_topk(pretrain_x, rbar);
  } else {
    // Dense p x p second-moment matrix (1/m) X^T X.
    num::Matrix cov = num::matmul_tn(pretrain_x, pretrain_x);
    for (double& v : cov.data()) v /= static_cast<double>(m);
    pairs = num::sym_eig_topk(cov, rbar);
  }

  DpMatrix dp;
  dp.p = p;
  dp.rbar = rbar;
  dp.eigvals = pairs.values;
  dp.w = num::Matrix(p, rbar);
  for (std::size_t j = 0; j < rbar; ++j) {
    const double scale = std::sqrt(std::max(0.0, pairs.values[j]));
    for (std::size_t i = 0; i < p; ++i) dp.w(i, j) = scale * pairs.vectors(i, j);
  }
  num::check_finite(dp.w, "dp matrix");
  return dp;
}

FactorScores extract_factors(const DpMatrix& dp, const num::Matrix& x) {
  require(x.cols() == dp.p, ErrorCode::Dimension,
          "extract_factors: covariate dimension mismatch");
  FactorScores out;
  out.scores = num::matmul(x, dp.w);
  const double inv_p = 1.0 / static_cast<double>(dp.p);
  for (double& v : out.scores.data()) v *= inv_p;
  return out;
}

DpDiagnostics dp_diagnostics(const DpMatrix& dp, const num::Matrix& b_true) {
  require(b_true.rows() == dp.p, ErrorCode::Dimension,
          "dp_diagnostics: loading matrix row count mismatch");
  DpDiagnostics out;
  out.h = num::matmul_tn(dp.w, b_true);
  const double inv_p = 1.0 / static_cast<double>(dp.p);
  for (double& v : out.h.data()) v *= inv_p;

  // Singular values of H from the spectrum of H^T H (r x r).
  const num::Matrix hth = num::matmul_tn(out.h, out.h);
  num::EigenPairs pairs = num::sym_eig_topk(hth, hth.rows());
  out.nu_max = pairs.values.empty() ? 0.0 : std::sqrt(std::max(0.0, pairs.values.front()));
  out.nu_min = pairs.values.empty() ? 0.0 : std::sqrt(std::max(0.0, pairs.values.back()));

  for (double v : dp.w.data()) out.w_max_abs = std::max(out.w_max_abs, std::abs(v));
  return out;
}

}  // namespace fiddle::factor
