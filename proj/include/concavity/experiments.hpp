#pragma once

#include <filesystem>
#include <fstream>

#include "concavity/config.hpp"
#include "concavity/convexity.hpp"
#include "concavity/envelope.hpp"
#include "concavity/report.hpp"
#include "concavity/solver.hpp"

namespace clab {

struct HypothesisCheck {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  std::string note;
};

struct TheoremReport {
  std::string preset;
  std::vector<HypothesisCheck> hypotheses;
  double delta = 0.0;
  double beta = 0.0;
  DefectReport defect;
  double envelope_gap = 0.0;
  double witness_distance = 0.0;
  double bound_rhs = std::numeric_limits<double>::quiet_NaN();
  double fitted_C = std::numeric_limits<double>::quiet_NaN();
  bool hypotheses_ok = true;
  bool verdict = false;
  bool solver_ok = true;
  SolveReport solve;
  json extra;
};

enum ExitCode { ExitOk = 0, ExitHypothesisRejected = 1, ExitVerdictFailed = 2, ExitSolverError = 3 };

inline json to_json(const TheoremReport& r) {
  json j;
  j["preset"] = r.preset;
  j["hypotheses"] = json::array();
  for (const auto& h : r.hypotheses)
    j["hypotheses"].push_back({{"name", h.name}, {"pass", h.pass}, {"measured", h.measured}, {"note", h.note}});
  j["delta"] = r.delta;
  j["beta"] = r.beta;
  j["defect"] = to_json(r.defect);
  j["envelope_gap"] = r.envelope_gap;
  j["witness_distance"] = r.witness_distance;
  if (std::isfinite(r.bound_rhs)) j["bound_rhs"] = r.bound_rhs;
  if (std::isfinite(r.fitted_C)) j["fitted_C"] = r.fitted_C;
  j["hypotheses_ok"] = r.hypotheses_ok;
  j["verdict"] = r.verdict;
  j["solver_ok"] = r.solver_ok;
  j["solve"] = to_json(r.solve);
  j["extra"] = r.extra;
  return j;
}

struct RunOptions {
  int lambda_steps = 16;
  bool refine = false;
  int grid_n = 0;  // when > 0, overrides the config spacing with h = 1/grid_n
  std::string out_dir;
};

struct RunContext {
  ConvexDomain domain;
  GridSpec spec;
  std::shared_ptr<const DomainMask> mask;
  SparseOperator op;
  Config cfg;
  SearchOptions search;
  EnvelopeOptions env;
};

inline RunContext make_context(const Config& cfg, const RunOptions& opts) {
  ConvexDomain dom = cfg.domain();
  Config c = cfg;
  GridSpec spec = [&] {
    if (opts.grid_n > 0) {
      BBox db = dom.bounding_box();
      double margin = cfg.num("grid.margin", 0.0625);
      BBox box{db.xmin - margin, db.xmax + margin, db.ymin - margin, db.ymax + margin};
      return GridSpec::with_spacing(box, 1.0 / opts.grid_n);
    }
    return cfg.grid(dom);
  }();
  auto mask = std::make_shared<DomainMask>(build_mask(dom, spec));
  SparseOperator op = assemble_laplacian(mask);
  SearchOptions search;
  search.lambda_steps = opts.lambda_steps;
  search.refine = opts.refine;
  search.max_endpoints = cfg.integer("search.max_endpoints", 280);
  EnvelopeOptions env;
  env.max_nodes = cfg.integer("envelope.max_nodes", 3500);
  return RunContext{std::move(dom), spec, mask, std::move(op), cfg, search, env};
}

namespace detail {

inline GridField const_field(const std::shared_ptr<const DomainMask>& mask, double v) {
  GridField f(mask, v);
  f.fill([v](Vec2) { return v; });
  return f;
}

constexpr double kBesselJ0FirstZero = 2.404825557695773;

inline Nonlinearity power_term(double gamma) {
  Nonlinearity B;
  B.smin = 0.0;
  B.b = [gamma](Vec2, double s) { return gamma == 0.0 ? 1.0 : std::pow(s, gamma); };
  B.db_ds = [gamma](Vec2, double s) {
    return gamma == 0.0 ? 0.0 : gamma * std::pow(std::max(s, 1e-12), gamma - 1.0);
  };
  B.claims_nonnegative = true;
  return B;
}

/// Lap u + u^gamma = 0 by continuation in gamma from the torsion problem.
inline std::pair<GridField, SolveReport> solve_power(const RunContext& ctx, double gamma, double tol,
                                                     const std::function<double(Vec2, double)>& extra = {},
                                                     const std::function<double(Vec2, double)>& extra_d = {}) {
  GridField ones = const_field(ctx.mask, 1.0);
  GridField u = solve_poisson(ctx.op, ones);
  SolveReport rep;
  rep.converged = true;
  const int stages = 4;
  for (int k = 1; k <= stages; ++k) {
    double g = gamma * k / stages;
    Nonlinearity B = power_term(g);
    std::tie(u, rep) = solve_semilinear(ctx.op, B, 1.0, u, tol);
    if (!rep.converged) return {u, rep};
  }
  if (extra) {
    Nonlinearity B = power_term(gamma);
    Nonlinearity Bfull;
    Bfull.smin = 0.0;
    Bfull.b = [B, extra](Vec2 x, double s) { return B.b(x, s) + extra(x, s); };
    if (extra_d) Bfull.db_ds = [B, extra_d](Vec2 x, double s) { return B.db_ds(x, s) + extra_d(x, s); };
    std::tie(u, rep) = solve_semilinear(ctx.op, Bfull, 1.0, u, tol);
  }
  return {u, rep};
}

inline double field_max(const GridField& u) {
  double m = -std::numeric_limits<double>::infinity();
  for (int idx = 0; idx < u.spec().size(); ++idx)
    if (u.node_usable(idx)) m = std::max(m, u.value(idx));
  return m;
}

inline double field_min_interior(const GridField& u) {
  double m = std::numeric_limits<double>::infinity();
  for (int idx : u.mask().unknowns()) m = std::min(m, u.value(idx));
  return m;
}

inline double sup_diff(const GridField& a, const GridField& b) {
  double m = 0.0;
  for (int idx = 0; idx < a.spec().size(); ++idx)
    if (a.node_usable(idx) && b.node_usable(idx)) m = std::max(m, std::abs(a.value(idx) - b.value(idx)));
  return m;
}

struct Sup1D {
  double sup = 0.0;   // clamped at 0
  double raw = -std::numeric_limits<double>::infinity();
  long long inadmissible = 0;
};

/// sup over s-pairs (log-spaced in (s_lo, s_hi]) and a lambda grid of the
/// harmonic convexity function of h; convex_side=false sweeps -HC instead.
inline Sup1D hc_sup_1d(const std::function<double(double)>& h, double s_lo, double s_hi, bool convex_side,
                       int s_steps = 120, int lambda_steps = 24) {
  Sup1D out;
  std::vector<double> ss(s_steps + 1), hs(s_steps + 1);
  for (int k = 0; k <= s_steps; ++k) {
    ss[k] = s_lo * std::pow(s_hi / s_lo, static_cast<double>(k) / s_steps);
    hs[k] = h(ss[k]);
  }
  for (int a = 0; a <= s_steps; ++a)
    for (int b = a; b <= s_steps; ++b)
      for (int l = 0; l <= lambda_steps; ++l) {
        double lam = static_cast<double>(l) / lambda_steps;
        double s2 = lam * ss[a] + (1.0 - lam) * ss[b];
        auto hc = hc_combine(hs[a], hs[b], h(s2), lam);
        if (!hc) {
          ++out.inadmissible;
          continue;
        }
        out.raw = std::max(out.raw, convex_side ? *hc : -*hc);
      }
  out.sup = std::max(0.0, out.raw);
  return out;
}

inline void add_check(TheoremReport& r, const std::string& name, bool pass, double measured,
                      const std::string& note = "") {
  r.hypotheses.push_back({name, pass, measured, note});
  if (!pass) r.hypotheses_ok = false;
}

/// Hopf sign gate. Quantitative only on strictly convex domains: at polygon
/// corners the normal derivative degenerates to zero, so near-corner samples
/// cannot clear a fixed threshold and the check is recorded without gating.
inline void add_hopf(TheoremReport& r, const RunContext& ctx, const GridField& u) {
  auto hopf = normal_sign_check(u);
  if (ctx.domain.strictly_convex()) {
    add_check(r, "hopf_normal_sign", hopf.pass, hopf.worst);
  } else {
    r.hypotheses.push_back({"hopf_normal_sign", true, hopf.worst,
                            "informational on polygons: corners degenerate the normal derivative"});
  }
}

}  // namespace detail

/// Writes the JSON summary plus CSV field dumps; field pointers may be null.
inline void emit_report(const TheoremReport& r, const std::string& out_dir,
                        const std::vector<std::pair<std::string, const GridField*>>& fields = {}) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    std::ofstream f(out_dir + "/report.json");
    f << to_json(r).dump(2) << '\n';
  }
  for (const auto& [name, field] : fields) {
    if (!field) continue;
    std::ofstream f(out_dir + "/" + name + ".csv");
    field->export_csv(f);
  }
  // defect table: the lambda scan along the argmax chord, one row per entry
  {
    std::ofstream f(out_dir + "/defect_table.csv");
    f << "rows=" << r.defect.lambda_steps + 1 << '\n';
    f << "lambda,y2x,y2y\n";
    for (int k = 0; k <= r.defect.lambda_steps; ++k) {
      double lam = r.defect.lambda_steps > 0 ? static_cast<double>(k) / r.defect.lambda_steps : 0.0;
      Vec2 y2 = lam * r.defect.argmax.y1 + (1.0 - lam) * r.defect.argmax.y3;
      f << lam << ',' << y2.x << ',' << y2.y << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// presets
// ---------------------------------------------------------------------------

/// Lap u + 1 = 0: the square root of the solution should be concave on any
/// convex domain; reports its defect, envelope gap and the Hopf sign check.
inline TheoremReport run_torsion(const RunContext& ctx, GridField* out_u = nullptr) {
  TheoremReport r;
  r.preset = "torsion";
  GridField ones = detail::const_field(ctx.mask, 1.0);
  GridField u = solve_poisson(ctx.op, ones);
  r.solve.converged = true;

  detail::add_hopf(r, ctx, u);

  GridField w = apply_transform(u, Transform::power(0.5));
  SearchOptions so = ctx.search;
  so.concavity = true;
  r.defect = defect_sup(w, so);
  auto env = concave_envelope_2d(w, ctx.env);
  r.envelope_gap = env.gap;
  r.witness_distance = env.witness_distance;

  double tol = ctx.cfg.num("tol.defect", 2e-3);
  r.verdict = r.hypotheses_ok && r.defect.sup_value <= tol && r.envelope_gap <= tol;
  r.extra["u_max"] = detail::field_max(u);
  {
    // value at the node closest to the domain center
    const auto& sp = ctx.spec;
    Vec2 c = ctx.domain.center();
    int ic = static_cast<int>(std::llround((c.x - sp.bbox.xmin) / sp.hx()));
    int jc = static_cast<int>(std::llround((c.y - sp.bbox.ymin) / sp.hy()));
    r.extra["u_center"] = u.value(ic, jc);
  }
  if (out_u) *out_u = u;
  return r;
}

/// First Dirichlet eigenpair; log of the eigenfunction should be concave.
inline TheoremReport run_eigen_log(const RunContext& ctx, GridField* out_u = nullptr) {
  TheoremReport r;
  r.preset = "eigen_log";
  auto [lambda1, u] = solve_eigen_first(ctx.op, ctx.cfg.num("tol.eigen", 1e-10));
  r.solve.converged = true;
  r.extra["lambda1"] = lambda1;

  double umin = detail::field_min_interior(u);
  detail::add_check(r, "eigenfield_positive", umin > 0.0, umin);

  double expected = ctx.cfg.num("check.lambda1", -1.0);
  if (expected < 0.0 && ctx.domain.kind() == ConvexDomain::Kind::Disk) {
    double rr = ctx.domain.semi_axis_a();
    expected = detail::kBesselJ0FirstZero * detail::kBesselJ0FirstZero / (rr * rr);
  }
  if (expected > 0.0) {
    double rel = std::abs(lambda1 - expected) / expected;
    detail::add_check(r, "lambda1_sanity", rel <= 0.01, rel);
    r.extra["lambda1_expected"] = expected;
  }

  GridField w = apply_transform(u, Transform::log());
  SearchOptions so = ctx.search;
  so.concavity = true;
  so.min_value = std::log(ctx.cfg.num("log.floor", 1e-6));
  r.defect = defect_sup(w, so);
  auto env = concave_envelope_2d(w.restricted_above(so.min_value), ctx.env);
  r.envelope_gap = env.gap;
  r.witness_distance = env.witness_distance;

  double tol = ctx.cfg.num("tol.defect", 5e-3);
  r.verdict = r.hypotheses_ok && r.defect.sup_value <= tol;
  if (out_u) *out_u = u;
  return r;
}

/// Lap u + u^gamma = 0, gamma in (0,1): u^{(1-gamma)/2} should be concave.
inline TheoremReport run_kennington_power(const RunContext& ctx, GridField* out_u = nullptr) {
  TheoremReport r;
  r.preset = "kennington_power";
  double gamma = ctx.cfg.num("gamma", 0.5);
  if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("gamma must lie in [0,1)");

  bool iball = ctx.domain.interior_ball_default() ||
               ctx.cfg.str("domain.interior_ball_assert", "false") == "true";
  detail::add_check(r, "interior_ball", iball, iball ? 1.0 : 0.0,
                    ctx.domain.interior_ball_default() ? "analytic" : "user-asserted");
  if (!iball) return r;

  auto [u, rep] = detail::solve_power(ctx, gamma, ctx.cfg.num("tol.solve", 1e-9));
  r.solve = rep;
  r.solver_ok = rep.converged;
  if (!rep.converged) return r;

  detail::add_hopf(r, ctx, u);

  double alpha = 0.5 * (1.0 - gamma);
  GridField w = apply_transform(u, Transform::power(alpha));
  SearchOptions so = ctx.search;
  so.concavity = true;
  r.defect = defect_sup(w, so);
  auto env = concave_envelope_2d(w, ctx.env);
  r.envelope_gap = env.gap;
  r.witness_distance = env.witness_distance;

  double tol = ctx.cfg.num("tol.defect", 2e-3);
  r.verdict = r.hypotheses_ok && r.defect.sup_value <= tol && r.envelope_gap <= tol;
  r.extra["gamma"] = gamma;
  r.extra["u_max"] = detail::field_max(u);
  if (out_u) *out_u = u;
  return r;
}

namespace detail {

/// Perturbation family for the power-concavity preset, parameterized through
/// h (the profile entering the harmonic-concavity hypothesis):
/// g(t) = h(t^{(1-gamma)/2}).
struct PowerPerturbation {
  std::function<double(double)> h;   // increasing, positive on (0, inf)
  std::function<double(double)> dh;  // derivative (for probes)
  double eps = 0.0;

  static PowerPerturbation from_config(const Config& cfg, double eps) {
    PowerPerturbation p;
    p.eps = eps;
    std::string kind = cfg.str("g.kind", "zero");
    if (kind == "zero") {
      p.h = [](double) { return 0.0; };
      p.dh = [](double) { return 0.0; };
    } else if (kind == "hpower") {
      double q = cfg.num("g.q", 1.0);
      p.h = [eps, q](double s) { return eps * std::pow(s, q); };
      p.dh = [eps, q](double s) { return eps * q * std::pow(std::max(s, 1e-300), q - 1.0); };
    } else if (kind == "hsigmoid") {
      double s0 = cfg.num("g.s0", 0.1), w = cfg.num("g.width", 0.02);
      p.h = [eps, s0, w](double s) { return eps / (1.0 + std::exp(-(s - s0) / w)); };
      p.dh = [eps, s0, w](double s) {
        double e = std::exp(-(s - s0) / w);
        return eps * e / (w * (1.0 + e) * (1.0 + e));
      };
    } else {
      throw std::runtime_error("unknown g.kind: " + kind);
    }
    return p;
  }

  bool zero() const { return eps == 0.0; }
  double g(double t, double gamma) const { return h(std::pow(t, 0.5 * (1.0 - gamma))); }
};

}  // namespace detail

/// Lap u + u^gamma - u^{(1+gamma)/2} g(u) = 0 with an increasing perturbation
/// g below the critical profile; measures delta from the harmonic-concavity
/// hypothesis on h and the witness distance of u^{(1-gamma)/2}.
inline TheoremReport run_power_perturbed_single(const RunContext& ctx, double eps, double witness_base,
                                                double fitted_C, GridField* out_u = nullptr) {
  TheoremReport r;
  r.preset = "power_perturbed";
  double gamma = ctx.cfg.num("gamma", 0.0);
  if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("gamma must lie in [0,1)");
  const double mu = ctx.cfg.num("margin.mu", 0.05);

  bool iball = ctx.domain.interior_ball_default() ||
               ctx.cfg.str("domain.interior_ball_assert", "false") == "true";
  detail::add_check(r, "interior_ball", iball, iball ? 1.0 : 0.0,
                    ctx.domain.interior_ball_default() ? "analytic" : "user-asserted");
  if (!iball) return r;

  auto pert = detail::PowerPerturbation::from_config(ctx.cfg, eps);

  // monotonicity probe on h (equivalently on g)
  {
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 200; ++k) worst = std::min(worst, pert.dh(k / 200.0));
    detail::add_check(r, "g_monotone", worst >= 0.0, worst);
  }

  double alpha = 0.5 * (1.0 - gamma);
  std::function<double(Vec2, double)> extra;
  if (!pert.zero())
    extra = [pert, gamma](Vec2, double s) {
      if (s <= 0.0) return 0.0;
      return -std::pow(s, 0.5 * (1.0 + gamma)) * pert.g(s, gamma);
    };
  auto [u, rep] = detail::solve_power(ctx, gamma, ctx.cfg.num("tol.solve", 1e-9), extra);
  r.solve = rep;
  r.solver_ok = rep.converged;
  if (!rep.converged) return r;
  double m = detail::field_max(u);
  r.extra["u_max"] = m;
  r.extra["eps"] = eps;

  // margin hypothesis g(t) <= (1-mu) t^{(gamma-1)/2}, re-validated on the
  // realized range (0, m]
  {
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 200; ++k) {
      double t = m * std::pow(1e-6, 1.0 - k / 200.0);
      double cap = (1.0 - mu) * std::pow(t, 0.5 * (gamma - 1.0));
      worst = std::min(worst, cap - pert.g(t, gamma));
    }
    detail::add_check(r, "g_margin", worst >= 0.0, worst);
  }

  // delta: sup of HC_h over s-pairs in (0, m^{(1-gamma)/2}]
  double s_hi = std::pow(m, alpha);
  auto sup = detail::hc_sup_1d(pert.h, 1e-6 * s_hi, s_hi, /*convex_side=*/true);
  r.delta = sup.sup;
  r.extra["delta_raw"] = sup.raw;

  detail::add_hopf(r, ctx, u);

  GridField w = apply_transform(u, Transform::power(alpha));
  SearchOptions so = ctx.search;
  so.concavity = true;
  r.defect = defect_sup(w, so);
  auto env = concave_envelope_2d(w, ctx.env);
  r.envelope_gap = env.gap;
  r.witness_distance = env.witness_distance;

  r.extra["theory_scale"] = std::pow(m, 1.0 - gamma) * r.delta;  // delta/beta of the transformed problem
  double allowance = 3.0 * witness_base;
  if (std::isfinite(fitted_C)) {
    r.fitted_C = fitted_C;
    r.bound_rhs = fitted_C * r.delta + allowance;
    r.verdict = r.hypotheses_ok && r.witness_distance <= r.bound_rhs;
  } else {
    r.verdict = r.hypotheses_ok;
  }
  if (out_u) *out_u = u;
  return r;
}

/// Sweep driver: runs the unperturbed base, fits C on the smallest measured
/// delta, then tests the remaining eps values against C*delta + allowance.
inline TheoremReport run_power_perturbed(const RunContext& ctx, GridField* out_u = nullptr) {
  std::vector<double> eps_list;
  if (ctx.cfg.has("eps.list"))
    eps_list = ctx.cfg.numbers("eps.list");
  else
    eps_list = {ctx.cfg.num("eps", 0.0)};
  std::sort(eps_list.begin(), eps_list.end());

  // unperturbed reference for the discretization allowance
  RunContext base_ctx = ctx;
  double witness_base = 0.0;
  {
    auto base = run_power_perturbed_single(base_ctx, 0.0, 0.0, std::numeric_limits<double>::quiet_NaN());
    witness_base = base.witness_distance;
    if (eps_list.size() == 1 && eps_list[0] == 0.0) {
      base.extra["witness_base"] = witness_base;
      base.verdict = base.hypotheses_ok;
      return base;
    }
  }

  std::vector<TheoremReport> runs;
  for (double e : eps_list)
    runs.push_back(run_power_perturbed_single(ctx, e, witness_base, std::numeric_limits<double>::quiet_NaN(),
                                              e == eps_list.back() ? out_u : nullptr));

  // fit C on the smallest positive delta
  double C = std::numeric_limits<double>::quiet_NaN();
  for (auto& rr : runs)
    if (rr.delta > 0.0) {
      C = rr.witness_distance / rr.delta;
      break;
    }

  TheoremReport r = runs.back();
  r.fitted_C = C;
  r.extra["witness_base"] = witness_base;
  json sweep = json::array();
  bool ok = r.hypotheses_ok;
  for (auto& rr : runs) {
    double bound = std::isfinite(C) ? C * rr.delta + 3.0 * witness_base
                                    : std::numeric_limits<double>::quiet_NaN();
    bool pass = !std::isfinite(bound) || rr.witness_distance <= bound;
    ok = ok && rr.hypotheses_ok && rr.solver_ok && pass;
    sweep.push_back({{"eps", rr.extra.value("eps", 0.0)},
                     {"delta", rr.delta},
                     {"witness_distance", rr.witness_distance},
                     {"envelope_gap", rr.envelope_gap},
                     {"defect", rr.defect.sup_value},
                     {"bound", bound},
                     {"pass", pass}});
  }
  r.extra["sweep"] = sweep;
  if (std::isfinite(C)) r.bound_rhs = C * r.delta + 3.0 * witness_base;
  r.verdict = ok;
  return r;
}

/// Lap u + lambda*u - u g(u) = 0 on a strictly convex domain; log u should be
/// within C*delta of a concave function.
inline TheoremReport run_log_concave(const RunContext& ctx, GridField* out_u = nullptr) {
  TheoremReport r;
  r.preset = "log_concave";
  double lam = ctx.cfg.num("lambda", 8.0);

  bool strict = ctx.domain.strictly_convex() && ctx.domain.strict_convexity_check(64);
  detail::add_check(r, "domain_strictly_convex", strict, strict ? 1.0 : 0.0);
  if (!strict) return r;

  // g family
  std::string kind = ctx.cfg.str("g.kind", "log1p");
  std::function<double(double)> g, dg;
  if (kind == "log1p") {
    double a = ctx.cfg.num("g.a", 2.0);
    g = [a](double t) { return a * std::log1p(t); };
    dg = [a](double t) { return a / (1.0 + t); };
  } else if (kind == "const") {
    double a = ctx.cfg.num("g.a", 1.0);
    g = [a](double) { return a; };
    dg = [](double) { return 0.0; };
  } else {
    throw std::runtime_error("unknown g.kind: " + kind);
  }

  // nontrivial branch: scale the torsion profile to the amplitude where the
  // effective eigenvalue lambda - g(m) matches lambda_1
  double lambda1 = solve_eigen_first(ctx.op, 1e-8).first;
  r.extra["lambda1"] = lambda1;
  if (lam <= lambda1) {
    detail::add_check(r, "lambda_above_lambda1", false, lam - lambda1,
                      "no positive nontrivial branch expected");
    return r;
  }
  double target = lam - lambda1;
  double m_guess = ctx.cfg.num("init.amplitude", -1.0);
  if (m_guess <= 0.0) {
    double lo = 1e-9, hi = 1.0;
    while (g(hi) < target && hi < 1e9) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      (g(mid) < target ? lo : hi) = mid;
    }
    m_guess = 0.5 * (lo + hi);
  }
  GridField ones = detail::const_field(ctx.mask, 1.0);
  GridField tors = solve_poisson(ctx.op, ones);
  double tmax = detail::field_max(tors);
  GridField init = (m_guess / tmax) * tors;

  Nonlinearity B;
  B.smin = 0.0;
  B.b = [lam, g](Vec2, double s) { return lam * s - s * g(s); };
  B.db_ds = [lam, g, dg](Vec2, double s) { return lam - g(s) - s * dg(s); };
  auto [u, rep] = solve_semilinear(ctx.op, B, 1.0, init, ctx.cfg.num("tol.solve", 1e-9));
  r.solve = rep;
  r.solver_ok = rep.converged;
  if (!rep.converged) return r;
  double m = detail::field_max(u);
  double umin = detail::field_min_interior(u);
  r.extra["u_max"] = m;
  detail::add_check(r, "solution_positive_nontrivial", umin > 0.0 && m > 1e-8, umin);

  // hypotheses: g <= lambda on (0, m]; g'(t) t >= c on the realized range
  detail::add_check(r, "g_capped_by_lambda", g(m) <= lam, lam - g(m));
  double floor = ctx.cfg.num("log.floor", 1e-6) * m;
  double c_meas = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 300; ++k) {
    double t = floor * std::pow(m / floor, k / 300.0);
    c_meas = std::min(c_meas, dg(t) * t);
  }
  double c_req = ctx.cfg.num("c.min", 0.0);
  detail::add_check(r, "g_monotone_floor", c_meas > 0.0 && c_meas >= c_req, c_meas);
  r.beta = c_meas;

  // delta: sup over domain chords of the convexity function of g(u(x))
  GridField gu = apply_transform(
      u, Transform::custom(g, dg, [](double) { return 0.0; }, 0.0, std::numeric_limits<double>::infinity()));
  SearchOptions so = ctx.search;
  auto drep = defect_sup(gu, so);
  r.delta = std::max(0.0, drep.sup_value);
  r.extra["delta_raw"] = drep.sup_value;

  GridField w = apply_transform(u, Transform::log());
  SearchOptions sol = ctx.search;
  sol.concavity = true;
  sol.min_value = std::log(floor);
  r.defect = defect_sup(w, sol);
  auto env = concave_envelope_2d(w.restricted_above(sol.min_value), ctx.env);
  r.envelope_gap = env.gap;
  r.witness_distance = env.witness_distance;

  double C = ctx.cfg.num("fit.C", -1.0);
  if (C > 0.0) {
    r.fitted_C = C;
    r.bound_rhs = C * r.delta + ctx.cfg.num("allowance", 3.0 * ctx.cfg.num("tol.defect", 5e-3));
    r.verdict = r.hypotheses_ok && r.witness_distance <= r.bound_rhs;
  } else {
    r.verdict = r.hypotheses_ok;
  }
  if (out_u) *out_u = u;
  return r;
}

/// Lap u + f(x) - u^{(1+gamma)/(1+2gamma)} g(x) = 0 with gamma >= 1:
/// u^{gamma/(1+2gamma)} should be within C*delta of a concave function.
inline TheoremReport run_source_perturbed(const RunContext& ctx, GridField* out_u = nullptr) {
  TheoremReport r;
  r.preset = "source_perturbed";
  double gamma = ctx.cfg.num("gamma", 1.0);
  if (gamma < 1.0) throw std::invalid_argument("gamma must be >= 1");
  const double q = (1.0 + gamma) / (1.0 + 2.0 * gamma);
  const double alpha = gamma / (1.0 + 2.0 * gamma);

  bool iball = ctx.domain.interior_ball_default() ||
               ctx.cfg.str("domain.interior_ball_assert", "false") == "true";
  detail::add_check(r, "interior_ball", iball, iball ? 1.0 : 0.0,
                    ctx.domain.interior_ball_default() ? "analytic" : "user-asserted");
  if (!iball) return r;

  // f family: f = (q0 + q1 * (1 - |x-c|^2 / R^2))^{1/gamma} keeps f^gamma concave
  std::function<double(Vec2)> f;
  std::string fkind = ctx.cfg.str("f.kind", "const");
  if (fkind == "const") {
    double f0 = ctx.cfg.num("f.value", 1.0);
    f = [f0](Vec2) { return f0; };
  } else if (fkind == "powbump") {
    double q0 = ctx.cfg.num("f.q0", 1.0), q1 = ctx.cfg.num("f.q1", 0.2), R = ctx.cfg.num("f.R", 2.0);
    Vec2 c = ctx.domain.center();
    f = [q0, q1, R, c, gamma](Vec2 x) {
      double b = q0 + q1 * (1.0 - (x - c).norm2() / (R * R));
      return std::pow(std::max(b, 1e-12), 1.0 / gamma);
    };
  } else {
    throw std::runtime_error("unknown f.kind: " + fkind);
  }

  // g family
  std::function<double(Vec2)> gfun;
  std::string gkind = ctx.cfg.str("g.kind", "zero");
  double geps = ctx.cfg.num("eps", 0.0);
  if (gkind == "zero") {
    gfun = [](Vec2) { return 0.0; };
  } else if (gkind == "cosbump") {
    double k = ctx.cfg.num("g.k", 3.0), g0 = ctx.cfg.num("g.base", 0.5);
    gfun = [g0, geps, k](Vec2 x) { return g0 + geps * std::cos(k * x.x) * std::cos(k * x.y); };
  } else {
    throw std::runtime_error("unknown g.kind: " + gkind);
  }

  // probes: f >= c, f^gamma concave on random chords, g >= 0
  double c_req = ctx.cfg.num("c.min", 0.1);
  {
    std::mt19937_64 rng(ctx.cfg.integer("probe.seed", 20240817));
    BBox box = ctx.domain.bounding_box();
    std::uniform_real_distribution<double> ux(box.xmin, box.xmax), uy(box.ymin, box.ymax), ul(0.0, 1.0);
    auto draw = [&]() {
      for (;;) {
        Vec2 p{ux(rng), uy(rng)};
        if (ctx.domain.contains(p)) return p;
      }
    };
    double fmin = std::numeric_limits<double>::infinity(), gmin = fmin, conc = fmin;
    for (int k = 0; k < 10000; ++k) {
      Vec2 a = draw(), b = draw();
      double lamc = ul(rng);
      Vec2 mid = lamc * a + (1.0 - lamc) * b;
      fmin = std::min({fmin, f(a), f(b)});
      gmin = std::min({gmin, gfun(a), gfun(b)});
      // concavity of f^gamma: the chord value must stay nonnegative
      double cfg_val = std::pow(f(mid), gamma) - lamc * std::pow(f(a), gamma) -
                       (1.0 - lamc) * std::pow(f(b), gamma);
      conc = std::min(conc, cfg_val);
    }
    detail::add_check(r, "f_lower_bound", fmin >= c_req, fmin);
    detail::add_check(r, "f_power_concave", conc >= -1e-10, conc);
    detail::add_check(r, "g_nonnegative", gmin >= 0.0, gmin);
    r.beta = c_req * (1.0 + gamma) / (1.0 + 2.0 * gamma);  // lower bound from the theory
  }
  if (!r.hypotheses_ok) return r;

  // delta: sup of HC_g over domain chords (g depends on x only)
  {
    Nonlinearity bg;
    bg.b = [gfun](Vec2 x, double) { return gfun(x); };
    GridField zero(ctx.mask);
    SearchOptions so = ctx.search;
    auto hrep = delta_estimate_harmonic(bg, zero, so, /*convex_side=*/true);
    r.delta = hrep.sup_value;
    r.extra["delta_raw"] = hrep.raw_value;
    r.extra["delta_inadmissible"] = hrep.inadmissible;
  }

  Nonlinearity B;
  B.smin = 0.0;
  B.b = [f, gfun, q](Vec2 x, double s) { return f(x) - std::pow(std::max(s, 0.0), q) * gfun(x); };
  B.db_ds = [gfun, q](Vec2 x, double s) { return -q * std::pow(std::max(s, 1e-12), q - 1.0) * gfun(x); };
  GridField ones = detail::const_field(ctx.mask, 1.0);
  GridField init = solve_poisson(ctx.op, ones);
  auto [u, rep] = solve_semilinear(ctx.op, B, 1.0, init, ctx.cfg.num("tol.solve", 1e-9));
  r.solve = rep;
  r.solver_ok = rep.converged;
  if (!rep.converged) return r;
  double m = detail::field_max(u);
  r.extra["u_max"] = m;

  // the m-dependent hypothesis can only be validated after solving
  {
    double worst = std::numeric_limits<double>::infinity();
    for (int idx : ctx.mask->unknowns()) {
      int i = idx % ctx.spec.nx, j = idx / ctx.spec.nx;
      Vec2 p = ctx.spec.node(i, j);
      worst = std::min(worst, f(p) - std::pow(m, q) * gfun(p));
    }
    detail::add_check(r, "f_dominates_m_power_g", worst >= 0.0, worst, "checked post-solve");
  }

  detail::add_hopf(r, ctx, u);

  GridField w = apply_transform(u, Transform::power(alpha));
  SearchOptions so = ctx.search;
  so.concavity = true;
  r.defect = defect_sup(w, so);
  auto env = concave_envelope_2d(w, ctx.env);
  r.envelope_gap = env.gap;
  r.witness_distance = env.witness_distance;
  r.extra["theory_scale"] = r.delta * gamma * m / (c_req * (1.0 + gamma));

  double C = ctx.cfg.num("fit.C", -1.0);
  if (C > 0.0) {
    r.fitted_C = C;
    r.bound_rhs = C * r.delta + ctx.cfg.num("allowance", 3.0 * ctx.cfg.num("tol.defect", 2e-3));
    r.verdict = r.hypotheses_ok && r.witness_distance <= r.bound_rhs;
  } else {
    r.verdict = r.hypotheses_ok;
  }
  if (out_u) *out_u = u;
  return r;
}

/// beta = 0 study: Lap v = b_delta + sqrt(delta) v for a delta-family of
/// non-concave sources; fits the envelope-gap exponent against delta.
inline TheoremReport run_perturbation_rate(const RunContext& ctx) {
  TheoremReport r;
  r.preset = "perturbation_rate";
  std::vector<double> deltas =
      ctx.cfg.has("delta.list") ? ctx.cfg.numbers("delta.list") : std::vector<double>{1e-2, 1e-3, 1e-4};
  std::sort(deltas.rbegin(), deltas.rend());
  double k = ctx.cfg.num("eta.k", 3.0);
  auto eta = [k](Vec2 x) { return std::cos(k * M_PI * x.x) * std::cos(k * M_PI * x.y); };

  // delta = 0 reference: the discretization floor of the envelope gap
  GridField ones = detail::const_field(ctx.mask, 1.0);
  GridField u0 = solve_poisson(ctx.op, ones);
  double floor_gap = concave_envelope_2d(u0, ctx.env).gap;
  r.extra["floor_gap"] = floor_gap;

  json table = json::array();
  std::vector<double> log_d, log_g;
  bool monotone = true;
  double prev_dist = std::numeric_limits<double>::infinity();
  bool all_solved = true;
  double floor_count = 0;

  for (double d : deltas) {
    Nonlinearity b;
    b.b = [d, eta](Vec2 x, double) { return -1.0 - d * eta(x); };
    b.db_ds = [](Vec2, double) { return 0.0; };

    // measured delta of the source family
    GridField rhs(ctx.mask);
    rhs.fill([d, eta](Vec2 x) { return 1.0 + d * eta(x); });
    SearchOptions so = ctx.search;
    auto dm = delta_estimate_concavity(b, rhs, so);
    double delta_meas = dm.sup_value;

    GridField ud = solve_poisson(ctx.op, rhs);
    double eps = std::sqrt(std::max(delta_meas, 1e-300));
    auto [vd, rep] = solve_perturbed(ctx.op, b, eps, ud, ctx.cfg.num("tol.solve", 1e-10));
    if (!rep.converged) {
      all_solved = false;
      table.push_back({{"delta", d}, {"solved", false}, {"message", rep.message}});
      continue;
    }
    double gap = concave_envelope_2d(vd, ctx.env).gap;
    double dist = detail::sup_diff(ud, vd);
    if (dist > prev_dist + 1e-12) monotone = false;
    prev_dist = dist;
    if (delta_meas > 0.0 && gap > 0.0) {
      log_d.push_back(std::log(delta_meas));
      log_g.push_back(std::log(gap));
    }
    if (gap <= 3.0 * std::max(floor_gap, 1e-14)) floor_count += 1;
    table.push_back({{"delta", d},
                     {"delta_measured", delta_meas},
                     {"eps", eps},
                     {"envelope_gap", gap},
                     {"dist_u_v", dist},
                     {"solved", true}});
  }
  r.extra["table"] = table;
  r.extra["dist_monotone"] = monotone;
  r.solver_ok = all_solved;
  r.solve.converged = all_solved;

  double exponent = std::numeric_limits<double>::quiet_NaN();
  if (log_d.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = static_cast<int>(log_d.size());
    for (int i = 0; i < n; ++i) {
      sx += log_d[i];
      sy += log_g[i];
      sxx += log_d[i] * log_d[i];
      sxy += log_d[i] * log_g[i];
    }
    exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  r.extra["exponent"] = exponent;
  bool floor_dominated = floor_count == static_cast<double>(deltas.size()) && all_solved;
  r.extra["floor_dominated"] = floor_dominated;
  detail::add_check(r, "rate_exponent_or_floor",
                    (std::isfinite(exponent) && exponent >= 0.4 && exponent <= 0.6) || floor_dominated,
                    exponent, floor_dominated ? "gaps within 3x of the delta=0 floor" : "");
  r.verdict = r.hypotheses_ok && all_solved;
  return r;
}

inline std::pair<TheoremReport, int> run_preset(const std::string& preset, const Config& cfg,
                                                const RunOptions& opts) {
  TheoremReport rep;
  try {
    RunContext ctx = make_context(cfg, opts);
    GridField u(ctx.mask);
    GridField* up = &u;
    if (preset == "torsion")
      rep = run_torsion(ctx, up);
    else if (preset == "eigen_log")
      rep = run_eigen_log(ctx, up);
    else if (preset == "kennington_power")
      rep = run_kennington_power(ctx, up);
    else if (preset == "power_perturbed")
      rep = run_power_perturbed(ctx, up);
    else if (preset == "log_concave")
      rep = run_log_concave(ctx, up);
    else if (preset == "source_perturbed")
      rep = run_source_perturbed(ctx, up);
    else if (preset == "perturbation_rate")
      rep = run_perturbation_rate(ctx);
    else
      throw std::runtime_error("unknown preset: " + preset);

    if (!opts.out_dir.empty()) {
      std::vector<std::pair<std::string, const GridField*>> fields;
      if (preset != "perturbation_rate") fields.push_back({"solution", up});
      emit_report(rep, opts.out_dir, fields);
    }
  } catch (const std::exception& e) {
    rep.solver_ok = false;
    rep.solve.message = e.what();
    return {rep, ExitSolverError};
  }
  if (!rep.solver_ok || !rep.solve.converged) {
    if (!rep.hypotheses_ok) return {rep, ExitHypothesisRejected};
    return {rep, ExitSolverError};
  }
  if (!rep.hypotheses_ok) return {rep, ExitHypothesisRejected};
  if (!rep.verdict) return {rep, ExitVerdictFailed};
  return {rep, ExitOk};
}

}  // namespace clab
