#pragma once

// Dense SPD solver for the ridge normal equations. The systems here are
// small (N ~ 100), so a plain Cholesky factorization with one step of
// iterative refinement is all that is needed.

#include <cmath>
#include <cstddef>
#include <vector>

#include "mca/errors.hpp"

namespace mca::detail {

// In-place lower-triangular Cholesky factor of a row-major n x n SPD matrix.
// Returns the ratio (max_ii / min_ii)^2 of the factor diagonal, a cheap
// condition estimate.
inline double cholesky_factor(std::vector<double>& a, std::size_t n) {
  double dmin = 0.0, dmax = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) throw numerical_error("cholesky: matrix is not positive definite");
    const double l = std::sqrt(d);
    a[j * n + j] = l;
    dmin = (j == 0) ? l : std::min(dmin, l);
    dmax = (j == 0) ? l : std::max(dmax, l);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / l;
    }
  }
  return (dmax / dmin) * (dmax / dmin);
}

inline void cholesky_solve(const std::vector<double>& l, std::size_t n, double* b) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * b[k];
    b[i] = s / l[i * n + i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l[k * n + ii] * b[k];
    b[ii] = s / l[ii * n + ii];
  }
}

// Solves A X = B for m right-hand sides (B row-major n x m, solved in place)
// with one pass of iterative refinement. Throws mca::numerical_error on a
// breakdown or when the condition estimate exceeds 1e14.
inline void solve_spd(const std::vector<double>& a, std::size_t n,
                      std::vector<double>& b, std::size_t m) {
  std::vector<double> l = a;
  const double cond = cholesky_factor(l, n);
  if (cond > 1e14) throw numerical_error("solve_spd: condition estimate exceeds 1e14");

  std::vector<double> x(n), r(n);
  for (std::size_t col = 0; col < m; ++col) {
    for (std::size_t i = 0; i < n; ++i) x[i] = b[i * m + col];
    cholesky_solve(l, n, x.data());
    // refinement: r = b - A x, x += A^{-1} r
    for (std::size_t i = 0; i < n; ++i) {
      long double s = b[i * m + col];
      for (std::size_t k = 0; k < n; ++k) s -= (long double)a[i * n + k] * x[k];
      r[i] = (double)s;
    }
    cholesky_solve(l, n, r.data());
    for (std::size_t i = 0; i < n; ++i) b[i * m + col] = x[i] + r[i];
  }
}

}  // namespace mca::detail
