#include "matrix.hpp"

#include <cmath>
#include <string>

#include "error.hpp"

namespace fiddle::num {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool all_finite(std::span<const double> v) {
  // NaN/Inf poison the running sum, so one pass suffices for sane magnitudes.
  double acc = 0.0;
  for (double x : v) acc += x;
  if (std::isfinite(acc)) return true;
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;  // overflow of the accumulator only
}

void check_finite(std::span<const double> v, const char* what) {
  if (!all_finite(v))
    fail(ErrorCode::NonFinite, std::string(what) + ": non-finite entry");
}

void check_finite(const Matrix& m, const char* what) {
  check_finite(std::span<const double>(m.data()), what);
}

namespace {

void require_shapes(std::size_t a, std::size_t b, const char* what) {
  require(a == b, ErrorCode::Dimension,
          std::string(what) + ": inner dimensions disagree (" +
              std::to_string(a) + " vs " + std::to_string(b) + ")");
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_shapes(a.cols(), b.rows(), "matmul");
  Matrix c(a.rows(), b.cols());
  const std::size_t k_dim = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (std::size_t k = 0; k < k_dim; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.row(k);
      for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
  check_finite(c, "matmul");
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require_shapes(a.rows(), b.rows(), "matmul_tn");
  Matrix c(a.cols(), b.cols());
  const std::size_t m = a.cols(), n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* arow = a.row(k);
    const double* brow = b.row(k);
    for (std::size_t i = 0; i < m; ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* crow = c.row(i);
      for (std::size_t j = 0; j < n; ++j) crow[j] += aki * brow[j];
    }
  }
  check_finite(c, "matmul_tn");
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require_shapes(a.cols(), b.cols(), "matmul_nt");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j)
      crow[j] = dot({arow, a.cols()}, b.row_span(j));
  }
  check_finite(c, "matmul_nt");
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require(x.size() == y.size(), ErrorCode::Dimension, "axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double dot(std::span<const double> x, std::span<const double> y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

double frobenius_norm(const Matrix& a) {
  double acc = 0.0;
  for (double x : a.data()) acc += x * x;
  return std::sqrt(acc);
}

}  // namespace fiddle::num
