#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace clab {

/// Compressed-row sparse matrix over solver unknowns.
struct CSRMatrix {
  int n = 0;
  std::vector<int> row_ptr;  // size n+1
  std::vector<int> col;
  std::vector<double> val;

  void apply(const std::vector<double>& x, std::vector<double>& y) const {
    for (int r = 0; r < n; ++r) {
      double s = 0.0;
      for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) s += val[k] * x[col[k]];
      y[r] = s;
    }
  }

  double diag(int r) const {
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
      if (col[k] == r) return val[k];
    return 0.0;
  }
};

struct CGResult {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  // final 2-norm of b - Ax
  bool indefinite = false;
};

/// Jacobi-preconditioned conjugate gradient for SPD systems. Reports (rather
/// than silently mishandling) directions of nonpositive curvature so callers
/// can shift and retry.
inline CGResult solve_cg(const CSRMatrix& A, const std::vector<double>& b, std::vector<double>& x,
                         double rel_tol = 1e-12, int max_iter = -1, double shift = 0.0) {
  const int n = A.n;
  if (max_iter < 0) max_iter = 20 * n + 100;
  std::vector<double> r(n), z(n), p(n), Ap(n);
  std::vector<double> dinv(n);
  for (int i = 0; i < n; ++i) {
    double d = A.diag(i) + shift;
    if (d <= 0.0) return {false, 0, 0.0, true};
    dinv[i] = 1.0 / d;
  }
  if (static_cast<int>(x.size()) != n) x.assign(n, 0.0);

  auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
    A.apply(v, out);
    if (shift != 0.0)
      for (int i = 0; i < n; ++i) out[i] += shift * v[i];
  };

  apply(x, Ap);
  double bnorm = 0.0;
  for (int i = 0; i < n; ++i) {
    r[i] = b[i] - Ap[i];
    bnorm += b[i] * b[i];
  }
  bnorm = std::sqrt(bnorm);
  const double stop = rel_tol * std::max(bnorm, 1e-300);

  double rz = 0.0;
  for (int i = 0; i < n; ++i) {
    z[i] = dinv[i] * r[i];
    rz += r[i] * z[i];
  }
  p = z;

  CGResult res;
  for (int it = 0; it < max_iter; ++it) {
    double rnorm = 0.0;
    for (int i = 0; i < n; ++i) rnorm += r[i] * r[i];
    rnorm = std::sqrt(rnorm);
    res.residual = rnorm;
    res.iterations = it;
    if (rnorm <= stop) {
      res.converged = true;
      return res;
    }
    apply(p, Ap);
    double pAp = 0.0;
    for (int i = 0; i < n; ++i) pAp += p[i] * Ap[i];
    if (pAp <= 0.0) {
      res.indefinite = true;
      return res;
    }
    double alpha = rz / pAp;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    double rz_new = 0.0;
    for (int i = 0; i < n; ++i) {
      z[i] = dinv[i] * r[i];
      rz_new += r[i] * z[i];
    }
    double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return res;
}

}  // namespace clab
