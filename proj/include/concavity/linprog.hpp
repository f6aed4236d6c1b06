#pragma once

#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace clab {

/// Seidel's randomized incremental LP in dimension <= 3:
///   minimize obj . x   subject to  g_i . x <= h_i  and  |x_j| <= box.
/// Small and exact enough for the envelope construction, where the LP has
/// three unknowns (a plane a*x + b*y + c) and one constraint per grid node.
namespace seidel {

struct Constraint3 {
  std::array<double, 3> g;
  double h;
};

struct LPResult {
  bool feasible = true;
  bool bounded = true;  // false when the optimum sits on the artificial box
  std::array<double, 3> x{0, 0, 0};
};

namespace detail {

struct LP1 {
  // minimize c*x on [lo, hi] with a*x <= b constraints
  double c;
  double lo, hi;
  bool feasible = true;
  void add(double a, double b, double tol) {
    if (std::abs(a) <= tol) {
      if (b < -tol) feasible = false;
      return;
    }
    double bound = b / a;
    if (a > 0)
      hi = std::min(hi, bound);
    else
      lo = std::max(lo, bound);
    if (lo > hi + tol) feasible = false;
  }
  double solve() const { return c >= 0 ? lo : hi; }
};

template <int D>
struct LPRec {
  using Vec = std::array<double, D>;
  using Con = std::pair<Vec, double>;  // g . x <= h

  static bool solve(const std::vector<Con>& cons, const Vec& obj, double box, double tol, Vec& out,
                    std::mt19937_64& rng) {
    // start at the box optimum
    for (int j = 0; j < D; ++j) out[j] = obj[j] > 0 ? -box : box;

    std::vector<int> order(cons.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    for (size_t step = 0; step < order.size(); ++step) {
      const auto& [g, h] = cons[order[step]];
      double lhs = 0;
      for (int j = 0; j < D; ++j) lhs += g[j] * out[j];
      if (lhs <= h + tol) continue;

      // re-solve on the hyperplane g . x = h over the previous constraints
      int k = 0;
      for (int j = 1; j < D; ++j)
        if (std::abs(g[j]) > std::abs(g[k])) k = j;
      if (std::abs(g[k]) <= tol) return false;  // degenerate infeasible row

      if constexpr (D == 1) {
        (void)k;
        return false;  // 1-D hyperplane is a point; handled by interval logic below
      } else {
        using VecL = std::array<double, D - 1>;
        using ConL = std::pair<VecL, double>;
        auto reduce = [&](const std::array<double, D>& v, double rhs) -> ConL {
          // substitute x_k = (h - sum_{j != k} g_j x_j) / g_k
          VecL w{};
          int t = 0;
          double r = rhs - v[k] * h / g[k];
          for (int j = 0; j < D; ++j) {
            if (j == k) continue;
            w[t++] = v[j] - v[k] * g[j] / g[k];
          }
          return {w, r};
        };

        std::vector<ConL> sub;
        sub.reserve(step + 2 * D);
        for (size_t t = 0; t < step; ++t) {
          const auto& [gg, hh] = cons[order[t]];
          sub.push_back(reduce(gg, hh));
        }
        // box bounds on the eliminated coordinate become constraints
        {
          std::array<double, D> e{};
          e[k] = 1.0;
          sub.push_back(reduce(e, box));
          e[k] = -1.0;
          sub.push_back(reduce(e, box));
        }
        std::array<double, D> objfull{};
        for (int j = 0; j < D; ++j) objfull[j] = obj[j];
        auto objred = reduce(objfull, 0.0).first;

        VecL sol{};
        if (!LPRec<D - 1>::solve(sub, objred, box, tol, sol, rng)) return false;
        int t = 0;
        double xk = h;
        for (int j = 0; j < D; ++j) {
          if (j == k) continue;
          out[j] = sol[t];
          xk -= g[j] * sol[t];
          ++t;
        }
        out[k] = xk / g[k];
      }
    }
    return true;
  }
};

template <>
struct LPRec<1> {
  using Vec = std::array<double, 1>;
  using Con = std::pair<Vec, double>;
  static bool solve(const std::vector<Con>& cons, const Vec& obj, double box, double tol, Vec& out,
                    std::mt19937_64&) {
    LP1 lp{obj[0], -box, box};
    for (const auto& [g, h] : cons) lp.add(g[0], h, tol);
    if (!lp.feasible) return false;
    out[0] = lp.solve();
    return true;
  }
};

}  // namespace detail

/// Minimizes obj . x over the constraint set; `box` bounds each coordinate.
inline LPResult solve3(const std::vector<Constraint3>& cons, const std::array<double, 3>& obj, double box,
                       double tol, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::pair<std::array<double, 3>, double>> cs;
  cs.reserve(cons.size());
  for (const auto& c : cons) cs.push_back({c.g, c.h});
  LPResult res;
  res.feasible = detail::LPRec<3>::solve(cs, obj, box, tol, res.x, rng);
  if (res.feasible) {
    for (double v : res.x)
      if (std::abs(v) >= 0.999 * box) res.bounded = false;
  }
  return res;
}

}  // namespace seidel
}  // namespace clab
