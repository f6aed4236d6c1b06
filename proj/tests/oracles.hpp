#pragma once

// Independent reference implementations used only by tests: brute-force chord
// sweeps, 1-D envelope oracles, and analytic reference values.

#include <cmath>
#include <vector>

#include "concavity/convexity.hpp"
#include "concavity/field.hpp"

namespace oracle {

// first zero of the Bessel function J0; lambda_1 of the unit disk is its square
constexpr double kBesselJ0FirstZero = 2.404825557695773;
constexpr double kLambda1Disk = kBesselJ0FirstZero * kBesselJ0FirstZero;

inline double lambda1_square() { return 2.0 * M_PI * M_PI; }

/// Center value of the torsion function on the unit square (0,1)^2, from the
/// separated Fourier series; also the maximum by symmetry.
inline double square_torsion_center() {
  double u = 0.125;
  for (int n = 1; n < 60; n += 2) {
    double sgn = ((n - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
    u -= 4.0 / (n * n * n * M_PI * M_PI * M_PI) * sgn / std::cosh(0.5 * n * M_PI);
  }
  return u;
}

/// Exhaustive double loop over usable node pairs and the lambda grid,
/// evaluating the chord defect with the same arithmetic expression as the
/// library sweep so results agree exactly.
inline double brute_force_defect(const clab::GridField& u, int lambda_steps, bool concavity = false,
                                 double min_value = -std::numeric_limits<double>::infinity()) {
  const auto& sp = u.spec();
  std::vector<int> nodes;
  for (int j = 0; j < sp.ny; ++j)
    for (int i = 0; i < sp.nx; ++i) {
      int idx = sp.index(i, j);
      if (u.node_usable(idx) && u.value(idx) >= min_value) nodes.push_back(idx);
    }
  const double sgn = concavity ? -1.0 : 1.0;
  double best = -std::numeric_limits<double>::infinity();
  for (size_t a = 0; a < nodes.size(); ++a)
    for (size_t b = a; b < nodes.size(); ++b) {
      clab::Vec2 p1 = sp.node(nodes[a] % sp.nx, nodes[a] / sp.nx);
      clab::Vec2 p3 = sp.node(nodes[b] % sp.nx, nodes[b] / sp.nx);
      double v1 = u.value(nodes[a]), v3 = u.value(nodes[b]);
      for (int k = 0; k <= lambda_steps; ++k) {
        double lam = static_cast<double>(k) / lambda_steps;
        clab::Vec2 y2 = lam * p1 + (1.0 - lam) * p3;
        double val = sgn * (u.evaluate(y2) - lam * v1 - (1.0 - lam) * v3);
        if (val > best) best = val;
      }
    }
  return best;
}

/// 1-D concave envelope by the pairwise-chord characterization:
/// env(x_i) = max over pairs (j,k) with x_j <= x_i <= x_k of the chord value.
inline std::vector<double> envelope_1d_chords(const std::vector<double>& xs,
                                              const std::vector<double>& vs) {
  const size_t n = xs.size();
  std::vector<double> env(vs);
  for (size_t j = 0; j < n; ++j)
    for (size_t k = j + 1; k < n; ++k)
      for (size_t i = j; i <= k; ++i) {
        double t = (xs[i] - xs[j]) / (xs[k] - xs[j]);
        env[i] = std::max(env[i], vs[j] + t * (vs[k] - vs[j]));
      }
  return env;
}

/// Minimal sup-distance from the samples to a concave sequence, by bisection
/// on t with the feasibility test "the concave majorant of v - t stays below
/// v + t". Acts as the linear-program oracle for witness optimality.
inline double nearest_concave_distance_1d(const std::vector<double>& xs, const std::vector<double>& vs) {
  double lo = 0.0, hi = 0.0;
  for (double v : vs) hi = std::max(hi, std::abs(v));
  hi = 2.0 * hi + 1.0;
  auto feasible = [&](double t) {
    std::vector<double> shifted(vs);
    for (double& v : shifted) v -= t;
    auto env = envelope_1d_chords(xs, shifted);
    for (size_t i = 0; i < vs.size(); ++i)
      if (env[i] > vs[i] + t + 1e-15) return false;
    return true;
  };
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace oracle
