#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace btkit {

// Dense symmetric positive-definite solves via Cholesky. The information
// matrices here are small (p <= ~60), so a plain deterministic factorization
// is all that is needed.

/// In-place lower Cholesky factorization of a row-major symmetric matrix.
/// Returns false when a pivot falls below the relative tolerance, i.e. the
/// matrix is not (numerically) positive definite.
inline bool cholesky_factor(std::vector<double>& a, std::size_t n) {
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    max_diag = std::max(max_diag, std::fabs(a[i * n + i]));
  }
  const double tol = std::max(max_diag, 1.0e-300) * 1e-12;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > tol)) return false;
    const double root = std::sqrt(d);
    a[j * n + j] = root;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / root;
    }
  }
  return true;
}

/// Solves L L^T x = b given the factor from cholesky_factor.
inline std::vector<double> cholesky_solve(const std::vector<double>& chol,
                                          std::size_t n,
                                          const std::vector<double>& b) {
  std::vector<double> x(b);
  for (std::size_t i = 0; i < n; ++i) {  // forward: L y = b
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= chol[i * n + k] * x[k];
    x[i] = s / chol[i * n + i];
  }
  for (std::size_t ii = n; ii-- > 0;) {  // backward: L^T x = y
    double s = x[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= chol[k * n + ii] * x[k];
    x[ii] = s / chol[ii * n + ii];
  }
  return x;
}

/// Full inverse from the Cholesky factor (column-by-column solves).
inline std::vector<double> cholesky_inverse(const std::vector<double>& chol,
                                            std::size_t n) {
  std::vector<double> inv(n * n, 0.0);
  std::vector<double> e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    std::vector<double> col = cholesky_solve(chol, n, e);
    for (std::size_t i = 0; i < n; ++i) inv[i * n + j] = col[i];
    e[j] = 0.0;
  }
  return inv;
}

}  // namespace btkit
