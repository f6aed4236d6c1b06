#pragma once

#include <optional>

#include "concavity/field.hpp"
#include "concavity/solver.hpp"

namespace clab {

/// Chord evaluation point of the defect functionals.
struct Triple {
  Vec2 y1, y3;
  double lambda = 0.5;
  Vec2 y2() const { return lambda * y1 + (1.0 - lambda) * y3; }
};

struct DefectReport {
  double sup_value = -std::numeric_limits<double>::infinity();
  double raw_value = -std::numeric_limits<double>::infinity();  // before clamping
  Triple argmax;
  std::string location_class = "interior";
  long long evaluations = 0;
  long long inadmissible = 0;
  int lambda_steps = 0;
  int endpoints_used = 0;
  int z_samples = 1;
};

/// Argument bundle of the harmonic convexity function.
struct HCQuery {
  Vec2 y1, y3;
  double s1 = 0.0, s3 = 0.0;
  double lambda = 0.5;
  Vec2 y2() const { return lambda * y1 + (1.0 - lambda) * y3; }
  double s2() const { return lambda * s1 + (1.0 - lambda) * s3; }
};

enum class HCCase { PositiveMix, BothZero, Inadmissible };

inline HCCase hc_case(double g1, double g3, double lambda) {
  if ((1.0 - lambda) * g1 + lambda * g3 > 0.0) return HCCase::PositiveMix;
  if (g1 == 0.0 && g3 == 0.0) return HCCase::BothZero;
  return HCCase::Inadmissible;
}

/// HC combination from endpoint values and the mid value; nullopt when the
/// admissibility conditions fail.
inline std::optional<double> hc_combine(double g1, double g3, double gmid, double lambda) {
  switch (hc_case(g1, g3, lambda)) {
    case HCCase::PositiveMix:
      return gmid - g1 * g3 / ((1.0 - lambda) * g1 + lambda * g3);
    case HCCase::BothZero:
      return gmid;
    case HCCase::Inadmissible:
      return std::nullopt;
  }
  return std::nullopt;
}

/// C_u(y1,y3,lambda) = u(y2) - lambda*u(y1) - (1-lambda)*u(y3).
inline double convexity_value(const GridField& u, const Triple& t) {
  auto check_flag = [&](Vec2 p) {
    const auto& sp = u.spec();
    int i = static_cast<int>(std::llround((p.x - sp.bbox.xmin) / sp.hx()));
    int j = static_cast<int>(std::llround((p.y - sp.bbox.ymin) / sp.hy()));
    if (i < 0 || i >= sp.nx || j < 0 || j >= sp.ny) return;
    Vec2 q = sp.node(i, j);
    if (std::abs(q.x - p.x) < 1e-12 && std::abs(q.y - p.y) < 1e-12 && u.flagged(sp.index(i, j)))
      throw std::domain_error("convexity_value touched an extended-value node");
  };
  check_flag(t.y1);
  check_flag(t.y3);
  return u.evaluate(t.y2()) - t.lambda * u.evaluate(t.y1) - (1.0 - t.lambda) * u.evaluate(t.y3);
}

/// Joint convexity of g(y,s) along paired chords.
inline double joint_convexity_value(const Nonlinearity& g, const HCQuery& q) {
  auto inside = [&](double s) { return s >= g.smin && s <= g.smax; };
  if (!inside(q.s1) || !inside(q.s3) || !inside(q.s2()))
    throw std::domain_error("joint convexity query outside the validity range");
  return g.eval(q.y2(), q.s2()) - q.lambda * g.eval(q.y1, q.s1) - (1.0 - q.lambda) * g.eval(q.y3, q.s3);
}

inline std::optional<double> harmonic_convexity_value(const Nonlinearity& g, const HCQuery& q) {
  double g1 = g.eval(q.y1, q.s1);
  double g3 = g.eval(q.y3, q.s3);
  double gm = g.eval(q.y2(), q.s2());
  return hc_combine(g1, g3, gm, q.lambda);
}

struct SearchOptions {
  int lambda_steps = 16;     // grid {0, 1/steps, ..., 1}
  bool refine = false;       // golden-section polish in lambda at the argmax
  int max_endpoints = 0;     // 0 = exhaustive; else deterministic stride subsample
  double min_value = -std::numeric_limits<double>::infinity();  // endpoint node filter
  bool concavity = false;    // sweep C_{-u} = -C_u instead of C_u
};

namespace detail {

struct Endpoint {
  Vec2 p;
  double value;
  bool interior;
};

/// Shared chord sweep. combine(v1, v3, lambda, mid) returns the functional
/// value or nullopt for inadmissible queries.
template <class Combine, class MidEval>
DefectReport chord_sweep(const std::vector<Endpoint>& pts, MidEval&& mid_eval, Combine&& combine,
                         const SearchOptions& opts) {
  DefectReport rep;
  rep.lambda_steps = opts.lambda_steps;

  std::vector<const Endpoint*> eps;
  if (opts.max_endpoints > 0 && static_cast<int>(pts.size()) > opts.max_endpoints) {
    double stride = static_cast<double>(pts.size()) / opts.max_endpoints;
    for (int k = 0; k < opts.max_endpoints; ++k) eps.push_back(&pts[static_cast<size_t>(k * stride)]);
  } else {
    for (const auto& e : pts) eps.push_back(&e);
  }
  rep.endpoints_used = static_cast<int>(eps.size());

  const int L = opts.lambda_steps;
  for (size_t a = 0; a < eps.size(); ++a) {
    for (size_t b = a; b < eps.size(); ++b) {
      const Endpoint& e1 = *eps[a];
      const Endpoint& e3 = *eps[b];
      for (int k = 0; k <= L; ++k) {
        double lam = static_cast<double>(k) / L;
        Vec2 y2 = lam * e1.p + (1.0 - lam) * e3.p;
        auto val = combine(e1.value, e3.value, lam, mid_eval(y2));
        ++rep.evaluations;
        if (!val) {
          ++rep.inadmissible;
          continue;
        }
        if (*val > rep.sup_value) {
          rep.sup_value = *val;
          rep.argmax = {e1.p, e3.p, lam};
          rep.location_class = (e1.interior && e3.interior) ? "interior" : "boundary";
        }
      }
    }
  }

  if (opts.refine && std::isfinite(rep.sup_value)) {
    const Triple t = rep.argmax;
    auto f = [&](double lam) -> double {
      Vec2 y2 = lam * t.y1 + (1.0 - lam) * t.y3;
      double v1 = 0, v3 = 0;
      // endpoint values of the argmax pair
      for (auto* e : eps) {
        if (e->p.x == t.y1.x && e->p.y == t.y1.y) v1 = e->value;
        if (e->p.x == t.y3.x && e->p.y == t.y3.y) v3 = e->value;
      }
      auto val = combine(v1, v3, lam, mid_eval(y2));
      return val ? *val : -std::numeric_limits<double>::infinity();
    };
    double lo = std::max(0.0, t.lambda - 1.0 / L), hi = std::min(1.0, t.lambda + 1.0 / L);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 60; ++it) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + gr * (hi - lo);
        f2 = f(x2);
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - gr * (hi - lo);
        f1 = f(x1);
      }
      rep.evaluations += 1;
    }
    double best = std::max(f1, f2);
    if (best > rep.sup_value) {
      rep.sup_value = best;
      rep.argmax.lambda = f1 > f2 ? x1 : x2;
    }
  }
  rep.raw_value = rep.sup_value;
  return rep;
}

inline std::vector<Endpoint> field_endpoints(const GridField& u, const SearchOptions& opts) {
  std::vector<Endpoint> pts;
  const auto& sp = u.spec();
  const auto& dom = u.mask().domain();
  for (int j = 0; j < sp.ny; ++j)
    for (int i = 0; i < sp.nx; ++i) {
      int idx = sp.index(i, j);
      if (!u.node_usable(idx)) continue;
      if (u.value(idx) < opts.min_value) continue;
      Vec2 p = sp.node(i, j);
      pts.push_back({p, u.value(idx), dom.contains(p)});
    }
  return pts;
}

}  // namespace detail

/// Supremum of C_u (or C_{-u} with opts.concavity) over node pairs and a
/// lambda grid, with optional local refinement.
inline DefectReport defect_sup(const GridField& u, const SearchOptions& opts = {}) {
  auto pts = detail::field_endpoints(u, opts);
  const double sgn = opts.concavity ? -1.0 : 1.0;
  auto combine = [sgn](double v1, double v3, double lam, double mid) -> std::optional<double> {
    return sgn * (mid - lam * v1 - (1.0 - lam) * v3);
  };
  auto mid_eval = [&u](Vec2 p) { return u.evaluate(p); };
  return detail::chord_sweep(pts, mid_eval, combine, opts);
}

struct ZSweepOptions {
  int angles = 8;
  int radii = 4;
};

/// delta per the concavity-defect estimate: sup over chords (and over a polar
/// z-grid in the closed gradient ball when b depends on z) of C_{-g} with
/// g(x) = b(x, u(x), z). Clamped below at zero; raw signed sup retained.
inline DefectReport delta_estimate_concavity(const Nonlinearity& b, const GridField& u,
                                             const SearchOptions& opts = {}, const ZSweepOptions& zopts = {}) {
  std::vector<Vec2> zs{{0.0, 0.0}};
  if (b.z_dependent) {
    zs.clear();
    double R = u.stats().gradient_bound;
    for (int r = 1; r <= zopts.radii; ++r)
      for (int a = 0; a < zopts.angles; ++a) {
        double th = 2.0 * M_PI * a / zopts.angles;
        double rr = R * r / zopts.radii;
        zs.push_back({rr * std::cos(th), rr * std::sin(th)});
      }
    zs.push_back({0.0, 0.0});
  }

  const auto& sp = u.spec();
  const auto& dom = u.mask().domain();
  DefectReport best;
  best.z_samples = static_cast<int>(zs.size());
  for (const Vec2& z : zs) {
    std::vector<detail::Endpoint> pts;
    for (int j = 0; j < sp.ny; ++j)
      for (int i = 0; i < sp.nx; ++i) {
        int idx = sp.index(i, j);
        if (!u.node_usable(idx)) continue;
        if (u.value(idx) < opts.min_value) continue;
        Vec2 p = sp.node(i, j);
        double s = u.value(idx);
        if (s < b.smin || s > b.smax) throw std::domain_error("field value outside nonlinearity validity");
        pts.push_back({p, b.eval(p, s, z), dom.contains(p)});
      }
    auto mid_eval = [&](Vec2 p) {
      double s = u.evaluate(p);
      s = std::clamp(s, b.smin, b.smax);
      return b.eval(p, s, z);
    };
    auto combine = [](double v1, double v3, double lam, double mid) -> std::optional<double> {
      return -(mid - lam * v1 - (1.0 - lam) * v3);  // C_{-g} = -C_g
    };
    auto rep = detail::chord_sweep(pts, mid_eval, combine, opts);
    rep.z_samples = best.z_samples;
    rep.evaluations += best.evaluations;
    if (rep.sup_value > best.sup_value || !std::isfinite(best.raw_value)) {
      long long ev = rep.evaluations;
      best = rep;
      best.evaluations = ev;
    } else {
      best.evaluations = rep.evaluations;
    }
  }
  best.raw_value = best.sup_value;
  best.sup_value = std::max(0.0, best.sup_value);
  return best;
}

/// delta per the harmonic variant: sup over admissible chords of
/// max(0, -HC_g) with g(x) = b(x, u(x)). Inadmissible chords are skipped and
/// counted. With `convex_side` the sweep returns sup of max(0, +HC) instead
/// (used by hypotheses phrased as HC <= delta).
inline DefectReport delta_estimate_harmonic(const Nonlinearity& b, const GridField& u,
                                            const SearchOptions& opts = {}, bool convex_side = false) {
  auto pts = detail::field_endpoints(u, opts);
  const auto& dom = u.mask().domain();
  (void)dom;
  for (auto& e : pts) {
    double s = std::clamp(e.value, b.smin, b.smax);
    e.value = b.eval(e.p, s);
  }
  auto mid_eval = [&](Vec2 p) {
    double s = std::clamp(u.evaluate(p), b.smin, b.smax);
    return b.eval(p, s);
  };
  const double sgn = convex_side ? 1.0 : -1.0;
  auto combine = [sgn](double v1, double v3, double lam, double mid) -> std::optional<double> {
    auto hc = hc_combine(v1, v3, mid, lam);
    if (!hc) return std::nullopt;
    return sgn * *hc;
  };
  auto rep = detail::chord_sweep(pts, mid_eval, combine, opts);
  rep.raw_value = rep.sup_value;
  rep.sup_value = std::max(0.0, rep.sup_value);
  return rep;
}

struct BetaReport {
  double beta = std::numeric_limits<double>::infinity();
  int s_samples = 0;
  int x_samples = 0;
  Vec2 arg_x;
  double arg_s = 0.0;
};

/// Infimum of the s-derivative of b over x-samples and an s-grid on
/// [-m, m] intersected with the validity range.
inline BetaReport beta_estimate(const Nonlinearity& b, double m, const std::vector<Vec2>& x_samples,
                                int s_steps = 64) {
  BetaReport rep;
  double lo = std::max(-m, b.smin), hi = std::min(m, b.smax);
  if (lo > hi) throw std::invalid_argument("empty s-range for beta estimate");
  rep.s_samples = s_steps + 1;
  rep.x_samples = static_cast<int>(x_samples.size());
  for (const Vec2& x : x_samples)
    for (int k = 0; k <= s_steps; ++k) {
      double s = lo + (hi - lo) * k / s_steps;
      double d = b.deriv(x, s);
      if (d < rep.beta) {
        rep.beta = d;
        rep.arg_x = x;
        rep.arg_s = s;
      }
    }
  return rep;
}

struct GrowthCheck {
  double surrogate = 0.0;  // max over the smallest decade of t of t^{-1/alpha} u(y + t(z-y))
  double reference = 0.0;  // u(z)
  bool pass = false;
};

/// Numeric surrogate of the boundary growth condition
/// limsup_{t->0+} t^{-1/alpha} u(y + t(z-y)) > u(z).
inline GrowthCheck boundary_growth_check(const GridField& u, double alpha, Vec2 y, Vec2 z,
                                         const std::vector<double>& t_grid) {
  if (alpha <= 0.0 || alpha >= 1.0) throw std::invalid_argument("alpha must be in (0,1)");
  if (t_grid.empty()) throw std::invalid_argument("empty t grid");
  double tmin = *std::min_element(t_grid.begin(), t_grid.end());
  GrowthCheck g;
  g.reference = u.evaluate(z);
  for (double t : t_grid) {
    if (t <= 0.0 || t > 1.0) throw std::invalid_argument("t grid must lie in (0,1]");
    if (t > 10.0 * tmin) continue;  // smallest decade only
    Vec2 p = y + t * (z - y);
    g.surrogate = std::max(g.surrogate, std::pow(t, -1.0 / alpha) * u.evaluate(p));
  }
  g.pass = g.surrogate > g.reference;
  return g;
}

struct NormalSignReport {
  bool pass = false;
  double worst = -std::numeric_limits<double>::infinity();  // largest (least negative) derivative
  BoundarySample worst_sample;
  int checked = 0;
  int skipped = 0;  // samples whose one-sided stencil exits the domain
  double threshold = 0.0;
};

/// Hopf-type check: outward normal derivative < -tau at every boundary
/// sample. tau < 0 requests the discretization-aware default 10*h*M.
inline NormalSignReport normal_sign_check(const GridField& u, double tau = -1.0) {
  NormalSignReport rep;
  if (tau < 0.0) tau = 10.0 * u.spec().h() * u.stats().M;
  rep.threshold = tau;
  const auto& dom = u.mask().domain();
  const double h = u.spec().h();
  for (const auto& b : u.mask().boundary_samples()) {
    Vec2 p2 = b.point - b.normal * (2 * h);
    if (dom.level(p2) > -0.5 * dom.boundary_tol()) {
      ++rep.skipped;
      continue;
    }
    double d = u.normal_derivative(b);
    ++rep.checked;
    if (d > rep.worst) {
      rep.worst = d;
      rep.worst_sample = b;
    }
  }
  rep.pass = rep.checked > 0 && rep.worst < -tau;
  return rep;
}

struct SubaddReport {
  double sum_violation = -std::numeric_limits<double>::infinity();   // HC_{f+g} - HC_f - HC_g
  double diff_violation = -std::numeric_limits<double>::infinity();  // HC_f - HC_g - HC_{f-g}
  long long sum_samples = 0;
  long long diff_samples = 0;
};

/// Property sweep of the harmonic-concavity sub-additivity inequalities over
/// random admissible queries inside the given box and s-range.
inline SubaddReport hc_subadd_check(const Nonlinearity& f, const Nonlinearity& g, const BBox& box,
                                    double s_lo, double s_hi, long long samples, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(box.xmin, box.xmax), uy(box.ymin, box.ymax),
      us(s_lo, s_hi), ul(0.0, 1.0);
  Nonlinearity fplusg, fminusg;
  fplusg.b = [&f, &g](Vec2 x, double s) { return f.eval(x, s) + g.eval(x, s); };
  fminusg.b = [&f, &g](Vec2 x, double s) { return f.eval(x, s) - g.eval(x, s); };

  SubaddReport rep;
  for (long long k = 0; k < samples; ++k) {
    HCQuery q;
    q.y1 = {ux(rng), uy(rng)};
    q.y3 = {ux(rng), uy(rng)};
    q.s1 = us(rng);
    q.s3 = us(rng);
    q.lambda = ul(rng);
    auto hf = harmonic_convexity_value(f, q);
    auto hg = harmonic_convexity_value(g, q);
    if (!hf || !hg) continue;
    if (auto hs = harmonic_convexity_value(fplusg, q)) {
      rep.sum_violation = std::max(rep.sum_violation, *hs - *hf - *hg);
      ++rep.sum_samples;
    }
    if (auto hd = harmonic_convexity_value(fminusg, q)) {
      rep.diff_violation = std::max(rep.diff_violation, *hf - *hg - *hd);
      ++rep.diff_samples;
    }
  }
  return rep;
}

struct RatioCheckReport {
  double max_excess = -std::numeric_limits<double>::infinity();  // C_{s^2/g} - C1*delta
  double c1 = 0.0;
  long long samples = 0;
};

/// Checks that s^2/g(y,s) is C1*delta-convex jointly, C1 = 2 m^2 C / c^3,
/// given a delta-concave g with 2*delta <= c <= g <= C on the sampled set.
inline RatioCheckReport ratio_convexity_check(const Nonlinearity& g, const ConvexDomain& dom, double c,
                                              double C, double m, double delta, long long samples,
                                              unsigned seed) {
  if (2.0 * delta > c) throw std::invalid_argument("requires 2*delta <= c");
  BBox box = dom.bounding_box();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(box.xmin, box.xmax), uy(box.ymin, box.ymax), us(-m, m),
      ul(0.0, 1.0);
  RatioCheckReport rep;
  rep.c1 = 2.0 * m * m * C / (c * c * c);
  auto phi = [&g](Vec2 y, double s) { return s * s / g.eval(y, s); };
  auto draw_point = [&]() {
    for (;;) {
      Vec2 p{ux(rng), uy(rng)};
      if (dom.contains(p) || dom.on_boundary(p)) return p;
    }
  };
  while (rep.samples < samples) {
    HCQuery q;
    q.y1 = draw_point();
    q.y3 = draw_point();
    q.s1 = us(rng);
    q.s3 = us(rng);
    q.lambda = ul(rng);
    double g1 = g.eval(q.y1, q.s1), g3 = g.eval(q.y3, q.s3), gm = g.eval(q.y2(), q.s2());
    if (g1 < c || g1 > C || g3 < c || g3 > C || gm < c || gm > C)
      throw std::domain_error("asserted bounds c <= g <= C violated at a probe");
    double cval = phi(q.y2(), q.s2()) - q.lambda * phi(q.y1, q.s1) - (1.0 - q.lambda) * phi(q.y3, q.s3);
    rep.max_excess = std::max(rep.max_excess, cval - rep.c1 * delta);
    ++rep.samples;
  }
  return rep;
}

struct InverseCheckReport {
  double worst_margin = std::numeric_limits<double>::infinity();  // min of HC_g + C^2*delta
  long long samples = 0;
  long long inadmissible = 0;
  double max_inv_defect = -std::numeric_limits<double>::infinity();  // spot check of C_{1/g}
};

/// Checks HC_g >= -C^2*delta given 0 < g < C with 1/g jointly delta-convex
/// (spot-verified at the sampled triples).
inline InverseCheckReport inverse_convexity_check(const Nonlinearity& g, const ConvexDomain& dom, double C,
                                                  double delta, long long samples, unsigned seed) {
  BBox box = dom.bounding_box();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(box.xmin, box.xmax), uy(box.ymin, box.ymax), ul(0.0, 1.0);
  double s_lo = std::max(g.smin, -1.0), s_hi = std::min(g.smax, 1.0);
  std::uniform_real_distribution<double> us(s_lo, s_hi);
  InverseCheckReport rep;
  auto draw_point = [&]() {
    for (;;) {
      Vec2 p{ux(rng), uy(rng)};
      if (dom.contains(p) || dom.on_boundary(p)) return p;
    }
  };
  while (rep.samples + rep.inadmissible < samples) {
    HCQuery q;
    q.y1 = draw_point();
    q.y3 = draw_point();
    q.s1 = us(rng);
    q.s3 = us(rng);
    q.lambda = ul(rng);
    double g1 = g.eval(q.y1, q.s1), g3 = g.eval(q.y3, q.s3), gm = g.eval(q.y2(), q.s2());
    if (g1 <= 0.0 || g1 >= C || g3 <= 0.0 || g3 >= C || gm <= 0.0 || gm >= C)
      throw std::domain_error("asserted bound 0 < g < C violated at a probe");
    double inv_defect =
        1.0 / gm - q.lambda / g1 - (1.0 - q.lambda) / g3;  // C_{1/g}, must be <= delta
    rep.max_inv_defect = std::max(rep.max_inv_defect, inv_defect);
    auto hc = hc_combine(g1, g3, gm, q.lambda);
    if (!hc) {
      ++rep.inadmissible;
      continue;
    }
    rep.worst_margin = std::min(rep.worst_margin, *hc + C * C * delta);
    ++rep.samples;
  }
  return rep;
}

}  // namespace clab
