#include "eig.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "error.hpp"

namespace fiddle::num {

namespace {

constexpr double kNegativeClamp = -1e-10;

double max_abs(const Matrix& m) {
  double v = 0.0;
  for (double x : m.data()) v = std::max(v, std::abs(x));
  return v;
}

void require_symmetric(const Matrix& s) {
  require(s.rows() == s.cols(), ErrorCode::Dimension,
          "sym_eig_topk: matrix must be square");
  check_finite(s, "sym_eig_topk");
  const double scale = max_abs(s);
  const double tol = 1e-10 * std::max(scale, 1.0);
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = i + 1; j < s.cols(); ++j)
      require(std::abs(s(i, j) - s(j, i)) <= tol, ErrorCode::InvalidArgument,
              "sym_eig_topk: matrix is not symmetric");
}

void fix_sign(Matrix& vectors, std::size_t col) {
  std::size_t arg = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < vectors.rows(); ++i) {
    const double a = std::abs(vectors(i, col));
    if (a > best) {
      best = a;
      arg = i;
    }
  }
  if (vectors(arg, col) < 0.0)
    for (std::size_t i = 0; i < vectors.rows(); ++i) vectors(i, col) = -vectors(i, col);
}

/// Full spectrum of a symmetric matrix by cyclic Jacobi. Returns eigenvalues
/// (unsorted) on the diagonal of `a` and accumulated rotations in `v`.
void jacobi_sweeps(Matrix& a, Matrix& v) {
  const std::size_t n = a.rows();
  v = Matrix::identity(n);
  if (n < 2) return;

  double base = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) base += a(i, j) * a(i, j);
  base = std::sqrt(base);
  const double stop = std::max(base, 1e-300) * 1e-15;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * a(i, j) * a(i, j);
    if (std::sqrt(off) <= stop) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= stop / (double(n) * double(n))) continue;
        const double app = a(p, p), aqq = a(q, q);
        const double theta = 0.5 * (aqq - app) / apq;
        double t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
}

}  // namespace

EigenPairs sym_eig_topk(const Matrix& s, std::size_t topk) {
  require_symmetric(s);
  const std::size_t n = s.rows();
  require(topk <= n, ErrorCode::InvalidArgument,
          "sym_eig_topk: topk exceeds matrix order");

  Matrix a = s, v;
  jacobi_sweeps(a, v);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenPairs out;
  out.values.resize(topk);
  out.vectors = Matrix(n, topk);
  for (std::size_t j = 0; j < topk; ++j) {
    double lambda = a(order[j], order[j]);
    if (lambda < 0.0 && lambda >= kNegativeClamp) lambda = 0.0;
    out.values[j] = lambda;
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    fix_sign(out.vectors, j);
  }
  check_finite(out.vectors, "sym_eig_topk vectors");
  return out;
}

EigenPairs gram_topk(const Matrix& x, std::size_t topk) {
  const std::size_t m = x.rows(), p = x.cols();
  require(m > 0 && p > 0, ErrorCode::InvalidArgument, "gram_topk: empty matrix");
  require(topk <= std::min(m, p), ErrorCode::InvalidArgument,
          "gram_topk: topk exceeds rank bound min(m, p)");
  check_finite(x, "gram_topk");

  // G = (1/m) X X^T
  Matrix g = matmul_nt(x, x);
  for (double& v : g.data()) v /= static_cast<double>(m);

  EigenPairs gram = sym_eig_topk(g, topk);

  EigenPairs out;
  out.values = gram.values;
  out.vectors = Matrix(p, topk);
  const double lambda_max = gram.values.empty() ? 0.0 : gram.values.front();
  const double zero_tol = std::max(lambda_max, 1.0) * 1e-14;

  for (std::size_t j = 0; j < topk; ++j) {
    if (gram.values[j] <= zero_tol) {
      // No direction recoverable from X^T w at a zero eigenvalue; report it
      // instead of fabricating a vector.
      out.values[j] = std::max(0.0, out.values[j]);
      out.rank_deficient = true;
      continue;
    }
    // v = X^T w / ||X^T w||, with ||X^T w|| = sqrt(m * lambda)
    std::vector<double> dir(p, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      axpy(gram.vectors(i, j), x.row_span(i), dir);
    double norm = std::sqrt(dot(dir, dir));
    require(norm > 0.0, ErrorCode::Internal, "gram_topk: degenerate direction");
    for (std::size_t i = 0; i < p; ++i) out.vectors(i, j) = dir[i] / norm;
    fix_sign(out.vectors, j);
  }
  check_finite(out.vectors, "gram_topk vectors");
  return out;
}

}  // namespace fiddle::num
