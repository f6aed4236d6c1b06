#pragma once

#include <random>

#include "concavity/field.hpp"
#include "concavity/sparse.hpp"

namespace clab {

/// The term B(x,s) of an equation stored as  Lap u + B(x,u) = 0, together
/// with its s-derivative (finite-difference fallback when absent) and an
/// optional gradient argument used only by the z-sweeps of the defect
/// estimators.
struct Nonlinearity {
  std::function<double(Vec2, double)> b;
  std::function<double(Vec2, double)> db_ds;  // optional
  bool z_dependent = false;
  std::function<double(Vec2, double, Vec2)> b_z;
  double smin = -std::numeric_limits<double>::infinity();
  double smax = std::numeric_limits<double>::infinity();
  bool claims_nonnegative = false;

  double eval(Vec2 x, double s) const { return b(x, s); }
  double eval(Vec2 x, double s, Vec2 z) const { return z_dependent ? b_z(x, s, z) : b(x, s); }

  double deriv(Vec2 x, double s) const {
    if (db_ds) return db_ds(x, s);
    double step = 1e-6 * std::max(1.0, std::abs(s));
    double lo = std::max(s - step, smin), hi = std::min(s + step, smax);
    return (b(x, hi) - b(x, lo)) / (hi - lo);
  }

  /// Cross-checks a supplied derivative against central differences at random
  /// probes; throws on mismatch beyond 1e-6 relative.
  void validate_derivative(const BBox& box, double s_lo, double s_hi, unsigned seed = 20240817,
                           int probes = 100) const {
    if (!db_ds) return;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(box.xmin, box.xmax), uy(box.ymin, box.ymax),
        us(s_lo, s_hi);
    for (int k = 0; k < probes; ++k) {
      Vec2 x{ux(rng), uy(rng)};
      double s = us(rng);
      double step = 1e-6 * std::max(1.0, std::abs(s));
      if (s - step < smin || s + step > smax) continue;
      double fd = (b(x, s + step) - b(x, s - step)) / (2 * step);
      double an = db_ds(x, s);
      double scale = std::max({std::abs(fd), std::abs(an), 1e-8});
      if (std::abs(fd - an) > 1e-5 * scale) {
        std::ostringstream msg;
        msg << "nonlinearity derivative mismatch at x=(" << x.x << ',' << x.y << "), s=" << s
            << ": supplied " << an << " vs finite-difference " << fd;
        throw std::invalid_argument(msg.str());
      }
    }
  }
};

/// Discrete Laplacian over the solver unknowns, Shortley-Weller at cut nodes.
/// Diagonal entries are negative (the operator approximates Lap, not -Lap).
/// Boundary contributions (value times coefficient) are kept separately so
/// nonzero Dirichlet traces can be folded into a right-hand side.
struct SparseOperator {
  CSRMatrix A;
  struct BoundaryTerm {
    int row;
    double coeff;
    Vec2 point;
  };
  std::vector<BoundaryTerm> boundary_terms;
  std::shared_ptr<const DomainMask> mask;

  /// rhs contribution of the Dirichlet data under a given trace.
  std::vector<double> fold_boundary(const std::function<double(Vec2)>& trace) const {
    std::vector<double> rhs(A.n, 0.0);
    for (const auto& t : boundary_terms) rhs[t.row] += t.coeff * trace(t.point);
    return rhs;
  }
};

inline SparseOperator assemble_laplacian(std::shared_ptr<const DomainMask> mask) {
  const auto& m = *mask;
  const auto& sp = m.spec();
  const int n = m.unknown_count();
  if (n < 1) throw std::invalid_argument("empty interior");

  SparseOperator op;
  op.mask = mask;
  op.A.n = n;
  op.A.row_ptr.assign(n + 1, 0);

  const int di[4] = {1, -1, 0, 0};
  const int dj[4] = {0, 0, 1, -1};
  const double step[4] = {sp.hx(), sp.hx(), sp.hy(), sp.hy()};

  std::vector<std::pair<int, double>> row;
  for (int r = 0; r < n; ++r) {
    int idx = m.unknowns()[r];
    int i = idx % sp.nx, j = idx / sp.nx;
    Vec2 p = sp.node(i, j);
    row.clear();
    double diag = 0.0;
    for (int axis = 0; axis < 2; ++axis) {
      int dplus = axis == 0 ? 0 : 2, dminus = axis == 0 ? 1 : 3;
      double dp = m.cut_distance(idx, dplus);
      double dm = m.cut_distance(idx, dminus);
      double cp = 2.0 / (dp * (dp + dm));
      double cm = 2.0 / (dm * (dp + dm));
      diag -= 2.0 / (dp * dm);
      for (int which = 0; which < 2; ++which) {
        int d = which == 0 ? dplus : dminus;
        double c = which == 0 ? cp : cm;
        double dist = which == 0 ? dp : dm;
        int ii = i + di[d], jj = j + dj[d];
        int nb = (ii >= 0 && ii < sp.nx && jj >= 0 && jj < sp.ny) ? sp.index(ii, jj) : -1;
        int unb = nb >= 0 ? m.unknown_of_node(nb) : -1;
        if (dist < step[d] || unb < 0) {
          // Dirichlet value at the crossing (cut point or on-boundary node)
          Vec2 cross{p.x + di[d] * dist, p.y + dj[d] * dist};
          op.boundary_terms.push_back({r, c, cross});
        } else {
          row.push_back({unb, c});
        }
      }
    }
    row.push_back({r, diag});
    std::sort(row.begin(), row.end());
    for (auto& [cidx, v] : row) {
      op.A.col.push_back(cidx);
      op.A.val.push_back(v);
    }
    op.A.row_ptr[r + 1] = static_cast<int>(op.A.col.size());
  }
  return op;
}

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;  // sup-norm of the discrete equation
  std::vector<int> damping_history;
  bool converged = false;
  std::string message;
};

namespace detail {

inline std::vector<double> gather(const DomainMask& m, const GridField& u) {
  std::vector<double> x(m.unknown_count());
  for (int r = 0; r < m.unknown_count(); ++r) x[r] = u.value(m.unknowns()[r]);
  return x;
}

inline GridField scatter(std::shared_ptr<const DomainMask> mask, const std::vector<double>& x) {
  GridField u(mask, 0.0);
  for (int r = 0; r < mask->unknown_count(); ++r) u.set_value(mask->unknowns()[r], x[r]);
  return u;
}

inline double sup_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

}  // namespace detail

/// Residual of Lap u + B(x,u) = 0 at the solver unknowns, sup-norm. This is
/// the independent re-check path used by tests.
inline double residual_sup(const SparseOperator& op, const GridField& u, const Nonlinearity& B,
                           double sign = 1.0) {
  const auto& m = *op.mask;
  auto x = detail::gather(m, u);
  std::vector<double> Ax(op.A.n);
  op.A.apply(x, Ax);
  for (const auto& t : op.boundary_terms) Ax[t.row] += t.coeff * u.trace(t.point);
  double worst = 0.0;
  for (int r = 0; r < op.A.n; ++r) {
    int idx = m.unknowns()[r];
    Vec2 p = m.spec().node(idx % m.spec().nx, idx / m.spec().nx);
    worst = std::max(worst, std::abs(Ax[r] + sign * B.eval(p, x[r])));
  }
  return worst;
}

/// Solves Lap u + f = 0 with zero Dirichlet data.
inline GridField solve_poisson(const SparseOperator& op, const GridField& f) {
  const auto& m = *op.mask;
  auto b = detail::gather(m, f);  // solve (-A) u = f
  std::vector<double> x(op.A.n, 0.0);

  // CG runs on -A, which is SPD for this stencil
  CSRMatrix negA = op.A;
  for (double& v : negA.val) v = -v;
  auto res = solve_cg(negA, b, x, 1e-13, 20 * op.A.n + 100);
  if (!res.converged) {
    // one more pass from the current iterate before giving up
    res = solve_cg(negA, b, x, 1e-13, 20 * op.A.n + 100);
  }
  std::vector<double> Ax(op.A.n);
  negA.apply(x, Ax);
  double worst = 0.0, fmax = 0.0;
  for (int r = 0; r < op.A.n; ++r) {
    worst = std::max(worst, std::abs(Ax[r] - b[r]));
    fmax = std::max(fmax, std::abs(b[r]));
  }
  if (worst > 1e-10 * std::max(fmax, 1e-300))
    throw std::runtime_error("linear solve failed to reach the requested residual");
  return detail::scatter(op.mask, x);
}

inline GridField solve_poisson(std::shared_ptr<const DomainMask> mask, const GridField& f) {
  return solve_poisson(assemble_laplacian(std::move(mask)), f);
}

/// Damped Newton for Lap u + sign*B(x,u) = 0, zero Dirichlet data.
inline std::pair<GridField, SolveReport> solve_semilinear(const SparseOperator& op, const Nonlinearity& B,
                                                          double sign, const GridField& init, double tol,
                                                          int max_newton = 60) {
  const auto& m = *op.mask;
  const auto& sp = m.spec();
  const int n = op.A.n;
  const bool clip_positive = B.smin >= 0.0;

  auto x = detail::gather(m, init);
  if (clip_positive)
    for (double& v : x) v = std::max(v, 0.0);

  std::vector<Vec2> pts(n);
  for (int r = 0; r < n; ++r) {
    int idx = m.unknowns()[r];
    pts[r] = sp.node(idx % sp.nx, idx / sp.nx);
  }

  auto residual = [&](const std::vector<double>& v, std::vector<double>& out) {
    op.A.apply(v, out);
    for (int r = 0; r < n; ++r) {
      double s = v[r];
      if (s < B.smin || s > B.smax) return false;
      out[r] += sign * B.eval(pts[r], s);
    }
    return true;
  };

  SolveReport rep;
  std::vector<double> F(n), Fnew(n), s(n), xnew(n);
  if (!residual(x, F)) {
    rep.message = "initial iterate outside the nonlinearity validity range";
    return {detail::scatter(op.mask, x), rep};
  }
  double fnorm = detail::sup_norm(F);

  for (int it = 0; it < max_newton; ++it) {
    rep.iterations = it;
    rep.residual = fnorm;
    if (fnorm <= tol) {
      rep.converged = true;
      return {detail::scatter(op.mask, x), rep};
    }

    // J = A + sign*diag(B'); CG solves (-J) s = F, then x += s
    CSRMatrix negJ = op.A;
    for (double& v : negJ.val) v = -v;
    for (int r = 0; r < n; ++r) {
      double seval = clip_positive ? std::max(x[r], 1e-12) : x[r];
      double d = sign * B.deriv(pts[r], seval);
      for (int k = negJ.row_ptr[r]; k < negJ.row_ptr[r + 1]; ++k)
        if (negJ.col[k] == r) negJ.val[k] -= d;
    }
    s.assign(n, 0.0);
    auto cg = solve_cg(negJ, F, s, 1e-10, 20 * n + 100);
    if (cg.indefinite || !cg.converged) {
      // Levenberg shift until the system turns definite
      double shift = 1.0;
      bool ok = false;
      for (int t = 0; t < 12 && !ok; ++t, shift *= 10.0) {
        s.assign(n, 0.0);
        auto r2 = solve_cg(negJ, F, s, 1e-10, 20 * n + 100, shift);
        ok = r2.converged;
      }
      if (!ok) {
        rep.message = "inner linear solve failed";
        return {detail::scatter(op.mask, x), rep};
      }
    }

    double lambda = 1.0;
    int halvings = 0;
    bool accepted = false;
    for (; halvings <= 30; ++halvings, lambda *= 0.5) {
      for (int r = 0; r < n; ++r) {
        xnew[r] = x[r] + lambda * s[r];
        if (clip_positive && xnew[r] < 0.0) xnew[r] = 0.0;
      }
      if (!residual(xnew, Fnew)) continue;
      double fn = detail::sup_norm(Fnew);
      if (fn < fnorm || fn <= tol) {
        x = xnew;
        F = Fnew;
        fnorm = fn;
        accepted = true;
        break;
      }
    }
    rep.damping_history.push_back(halvings);
    if (!accepted) {
      rep.message = "Newton stagnation: damping exhausted";
      rep.residual = fnorm;
      return {detail::scatter(op.mask, x), rep};
    }
  }
  rep.residual = fnorm;
  rep.converged = fnorm <= tol;
  if (!rep.converged) rep.message = "Newton iteration limit reached";
  return {detail::scatter(op.mask, x), rep};
}

inline std::pair<GridField, SolveReport> solve_semilinear(std::shared_ptr<const DomainMask> mask,
                                                          const Nonlinearity& B, double sign,
                                                          const GridField& init, double tol) {
  return solve_semilinear(assemble_laplacian(std::move(mask)), B, sign, init, tol);
}

/// First Dirichlet eigenpair of -Lap by inverse power iteration with CG
/// inner solves. Returns (lambda_1, u) with sup u = 1 and u > 0 inside.
inline std::pair<double, GridField> solve_eigen_first(const SparseOperator& op, double tol,
                                                      int max_outer = 200) {
  const int n = op.A.n;
  if (n < 9) throw std::invalid_argument("eigen solve needs at least 9 interior nodes");
  CSRMatrix negA = op.A;
  for (double& v : negA.val) v = -v;

  std::vector<double> v(n, 1.0), w(n), Av(n);
  double lambda_prev = 0.0;
  for (int it = 0; it < max_outer; ++it) {
    w = v;  // warm start
    auto cg = solve_cg(negA, v, w, 1e-12, 20 * n + 100);
    if (!cg.converged) throw std::runtime_error("eigen inner solve failed to converge");
    double nrm = 0.0;
    for (double x : w) nrm += x * x;
    nrm = std::sqrt(nrm);
    for (double& x : w) x /= nrm;
    negA.apply(w, Av);
    double num = 0.0;
    for (int i = 0; i < n; ++i) num += w[i] * Av[i];
    double lambda = num;  // Rayleigh quotient, ||w||_2 = 1
    v = w;
    if (it > 0 && std::abs(lambda - lambda_prev) < tol * std::abs(lambda)) {
      lambda_prev = lambda;
      break;
    }
    lambda_prev = lambda;
  }

  // sign and sup normalization
  double vmax = 0.0;
  for (double x : v) vmax = std::max(vmax, std::abs(x));
  double signfix = 0.0;
  for (double x : v) signfix += x;
  double scale = (signfix >= 0 ? 1.0 : -1.0) / vmax;
  for (double& x : v) x *= scale;
  return {lambda_prev, detail::scatter(op.mask, v)};
}

inline std::pair<double, GridField> solve_eigen_first(std::shared_ptr<const DomainMask> mask, double tol) {
  return solve_eigen_first(assemble_laplacian(std::move(mask)), tol);
}

/// Solves Lap v = b(x,v) + eps*v with zero data: Lap v + B~(x,v) = 0 with
/// B~ = -b - eps*s.
inline std::pair<GridField, SolveReport> solve_perturbed(const SparseOperator& op, const Nonlinearity& b,
                                                         double eps, const GridField& init, double tol) {
  if (eps < 0.0) throw std::invalid_argument("perturbation eps must be nonnegative");
  Nonlinearity Bt;
  Bt.smin = b.smin;
  Bt.smax = b.smax;
  Bt.b = [f = b.b, eps](Vec2 x, double s) { return -f(x, s) - eps * s; };
  if (b.db_ds)
    Bt.db_ds = [df = b.db_ds, eps](Vec2 x, double s) { return -df(x, s) - eps; };
  return solve_semilinear(op, Bt, 1.0, init, tol);
}

}  // namespace clab
