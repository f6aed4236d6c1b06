// Acceptance gate: one line per criterion, exit 0 iff all pass.

#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "concavity/experiments.hpp"
#include "oracles.hpp"

using namespace clab;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& what) {
  if (!ok) ++failures;
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << n << ": " << what << '\n';
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(3) << v;
  return os.str();
}

Config parse_cfg(const std::string& text) {
  std::istringstream is(text);
  return Config::parse(is);
}

RunContext disk_context(int grid_n, const std::string& extra_cfg = "") {
  Config cfg = parse_cfg("domain.kind=disk\ndomain.radius=1\n" + extra_cfg);
  RunOptions opts;
  opts.grid_n = grid_n;
  opts.lambda_steps = 16;
  return make_context(cfg, opts);
}

std::shared_ptr<const DomainMask> square_mask(int cells) {
  auto dom = ConvexDomain::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  double h = 1.0 / cells;
  GridSpec spec(cells + 5, cells + 5, {-2 * h, 1 + 2 * h, -2 * h, 1 + 2 * h});
  return std::make_shared<DomainMask>(build_mask(dom, spec));
}

GridField solve_torsion(const RunContext& ctx) {
  GridField ones(ctx.mask, 1.0);
  ones.fill([](Vec2) { return 1.0; });
  return solve_poisson(ctx.op, ones);
}

// 1. Torsion benchmark on the disk at h = 1/128.
void criterion1() {
  auto ctx = disk_context(128);
  GridField u = solve_torsion(ctx);
  Nonlinearity one;
  one.b = [](Vec2, double) { return 1.0; };
  double res = residual_sup(ctx.op, u, one);
  double h = ctx.spec.h();
  double cerr = std::abs(u.evaluate({0, 0}) - 0.25);

  GridField w = apply_transform(u, Transform::power(0.5));
  SearchOptions so = ctx.search;
  so.concavity = true;
  double defect = defect_sup(w, so).sup_value;
  double gap = concave_envelope_2d(w, ctx.env).gap;

  bool ok = res <= 1e-10 && cerr <= 2.0 * h * h && defect <= 2e-3 && gap <= 2e-3;
  report(1, ok,
         "torsion disk h=1/128 (residual=" + fmt(res) + ", center_err=" + fmt(cerr) +
             ", sqrt_defect=" + fmt(defect) + ", envelope_gap=" + fmt(gap) + ")");
}

// 2. First eigenpair on the disk at h = 1/64; log-concavity defect.
void criterion2() {
  auto ctx = disk_context(64);
  auto [lambda1, u] = solve_eigen_first(ctx.op, 1e-10);
  double rel = std::abs(lambda1 - oracle::kLambda1Disk) / oracle::kLambda1Disk;
  bool positive = true;
  for (int idx : ctx.mask->unknowns()) positive = positive && u.value(idx) > 0.0;

  GridField w = apply_transform(u, Transform::log());
  SearchOptions so = ctx.search;
  so.concavity = true;
  so.min_value = std::log(1e-6);
  double defect = defect_sup(w, so).sup_value;

  bool ok = rel <= 0.01 && positive && defect <= 5e-3;
  report(2, ok,
         "eigen disk h=1/64 (lambda1=" + fmt(lambda1) + ", rel_err=" + fmt(rel) +
             ", positive=" + (positive ? "yes" : "no") + ", log_defect=" + fmt(defect) + ")");
}

// 3. Power problem gamma=1/2 at h=1/128: the predicted exponent 1/4 is
// defect-small AND a wrong exponent 0.6 shows a defect at least 10x larger.
void criterion3() {
  auto ctx = disk_context(128, "gamma=0.5\n");
  GridField u(ctx.mask);
  auto rep = run_kennington_power(ctx, &u);
  double d1 = rep.defect.sup_value;

  GridField w2 = apply_transform(u, Transform::power(0.6));
  SearchOptions so = ctx.search;
  so.concavity = true;
  double d2 = defect_sup(w2, so).sup_value;

  bool ok = rep.solver_ok && d1 <= 2e-3 && d2 > 10.0 * d1;
  report(3, ok,
         "gamma=1/2 exponent contrast (defect_quarter=" + fmt(d1) + ", defect_0.6=" + fmt(d2) +
             ", ratio=" + fmt(d1 > 0 ? d2 / d1 : std::numeric_limits<double>::infinity()) + ")");
}

// 4. Perturbed power problem: witness distance per unit delta should be
// stable (within a factor 3) across eps in {1e-1, 1e-2}.
void criterion4() {
  auto ctx = disk_context(64, "gamma=0.5\ng.kind=hpower\ng.q=1\n");
  std::vector<double> ratios;
  std::string detail;
  bool solved = true;
  for (double eps : {1e-1, 1e-2}) {
    auto rep = run_power_perturbed_single(ctx, eps, 0.0, std::numeric_limits<double>::quiet_NaN());
    solved = solved && rep.solver_ok;
    double ratio = rep.delta > 0.0 ? rep.witness_distance / rep.delta
                                   : std::numeric_limits<double>::infinity();
    ratios.push_back(ratio);
    detail += " eps=" + fmt(eps) + ": wd=" + fmt(rep.witness_distance) + " delta=" + fmt(rep.delta) +
              " wd/delta=" + fmt(ratio) + ";";
  }
  double spread = std::max(ratios[0], ratios[1]) / std::min(ratios[0], ratios[1]);
  bool ok = solved && std::isfinite(spread) && spread < 3.0;
  report(4, ok, "perturbed power response (spread=" + fmt(spread) + ";" + detail + ")");
}

// 5. Rate study over delta in {1e-2, 1e-3, 1e-4}: fitted exponent in
// [0.4, 0.6], or every gap within 3x of the measured delta=0 floor.
void criterion5() {
  Config cfg = parse_cfg("domain.kind=disk\ndomain.radius=1\ndelta.list=1e-2,1e-3,1e-4\n");
  RunOptions opts;
  opts.grid_n = 64;
  opts.lambda_steps = 16;
  RunContext ctx = make_context(cfg, opts);
  auto rep = run_perturbation_rate(ctx);
  bool ok = false;
  double measured = std::numeric_limits<double>::quiet_NaN();
  for (const auto& h : rep.hypotheses)
    if (h.name == "rate_exponent_or_floor") {
      ok = h.pass;
      measured = h.measured;
    }
  ok = ok && rep.solver_ok;
  report(5, ok,
         "perturbation rate (exponent=" + fmt(measured) +
             ", floor_gap=" + fmt(rep.extra.value("floor_gap", -1.0)) + ", floor_dominated=" +
             (rep.extra.value("floor_dominated", false) ? "yes" : "no") + ")");
}

// 6. Randomized property suite, 1e5 samples per sweep.
void criterion6() {
  const long long N = 100000;
  const unsigned seed = 20240817;
  BBox box{-1.0, 1.0, -1.0, 1.0};
  bool ok = true;
  std::string detail;

  {
    Nonlinearity f, g;
    f.b = [](Vec2 x, double s) { return 2.0 + std::sin(x.x + s) * std::cos(x.y); };
    g.b = [](Vec2 x, double s) { return 1.5 + 0.5 * std::cos(x.x - s) * std::sin(x.y + 1.0); };
    auto rep = hc_subadd_check(f, g, box, -1.0, 1.0, N, seed);
    ok = ok && rep.sum_samples > 0 && rep.sum_violation <= 1e-10 && rep.diff_samples > 0 &&
         rep.diff_violation <= 1e-10;
    detail += " subadd=" + fmt(std::max(rep.sum_violation, rep.diff_violation)) + ";";
  }
  {
    ConvexDomain dom = ConvexDomain::disk({0, 0}, 1.0);
    Nonlinearity g;
    g.b = [](Vec2 x, double s) { return 5.0 - 0.2 * (x.x * x.x + x.y * x.y + s * s); };
    auto rep = ratio_convexity_check(g, dom, 4.0, 5.1, 1.0, 1e-3, N, seed + 1);
    ok = ok && rep.max_excess <= 0.0;
    detail += " ratio_excess=" + fmt(rep.max_excess) + ";";
  }
  {
    ConvexDomain dom = ConvexDomain::disk({0, 0}, 1.0);
    Nonlinearity g;
    g.smin = -1.0;
    g.smax = 1.0;
    g.b = [](Vec2 x, double s) { return 1.0 / (0.5 + 0.1 * (x.x * x.x + x.y * x.y + s * s)); };
    auto rep = inverse_convexity_check(g, dom, 2.1, 1e-3, N, seed + 2);
    ok = ok && rep.samples > 0 && rep.worst_margin >= -1e-10;
    detail += " inverse_margin=" + fmt(rep.worst_margin) + ";";
  }
  {
    // HC >= C at every admissible query of a positive nonlinearity
    Nonlinearity g;
    g.b = [](Vec2 x, double s) { return 2.0 + std::sin(x.x + s) * std::cos(x.y); };
    std::mt19937_64 rng(seed + 3);
    std::uniform_real_distribution<double> ux(-1.0, 1.0), us(0.2, 3.0), ul(0.0, 1.0);
    double worst = std::numeric_limits<double>::infinity();
    for (long long k = 0; k < N; ++k) {
      HCQuery q;
      q.y1 = {ux(rng), ux(rng)};
      q.y3 = {ux(rng), ux(rng)};
      q.s1 = us(rng);
      q.s3 = us(rng);
      q.lambda = ul(rng);
      auto hc = harmonic_convexity_value(g, q);
      if (!hc) continue;
      worst = std::min(worst, *hc - joint_convexity_value(g, q));
    }
    ok = ok && worst >= -1e-12;
    detail += " hc_minus_c_min=" + fmt(worst);
  }
  report(6, ok, "property suite, 1e5 samples (" + detail + ")");
}

// 7. Search and envelope against independent oracles.
void criterion7() {
  bool ok = true;
  std::string detail;

  {
    auto mask = square_mask(24);
    GridField u(mask);
    u.fill([](Vec2 p) { return std::sin(3.0 * p.x) * std::cos(2.0 * p.y) + 0.3 * p.x * p.y; });
    SearchOptions so;
    so.lambda_steps = 8;
    so.max_endpoints = 0;
    double lib = defect_sup(u, so).sup_value;
    double ref = oracle::brute_force_defect(u, 8);
    ok = ok && lib == ref;
    detail += " sweep_diff=" + fmt(lib - ref) + ";";
  }
  {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ur(-1.0, 1.0);
    std::vector<double> xs(64), vs(64);
    for (int i = 0; i < 64; ++i) {
      xs[i] = i / 63.0;
      vs[i] = std::sin(7.0 * xs[i]) + ur(rng);
    }
    auto res = concave_envelope_1d(xs, vs);
    auto ref = oracle::envelope_1d_chords(xs, vs);
    double worst = 0.0;
    for (int i = 0; i < 64; ++i) worst = std::max(worst, std::abs(res.envelope[i] - ref[i]));
    ok = ok && worst <= 1e-9;
    detail += " env1d_err=" + fmt(worst) + ";";
  }
  {
    auto mask = square_mask(16);
    GridField u(mask);
    u.fill([](Vec2 p) { return (2 * p.x - 1) * (2 * p.x - 1) + (2 * p.y - 1) * (2 * p.y - 1); });
    auto res = concave_envelope_2d(u);
    auto sweep = midpoint_sweep_envelope(u);
    double worst = 0.0;
    for (int idx = 0; idx < u.spec().size(); ++idx)
      if (u.node_usable(idx)) worst = std::max(worst, std::abs(res.envelope.value(idx) - sweep[idx]));
    ok = ok && worst <= 1e-8;
    detail += " env2d_err=" + fmt(worst);
  }
  report(7, ok, "oracle agreement (" + detail + ")");
}

// 8. Boundary diagnostics: Hopf sign and the growth surrogate.
void criterion8() {
  auto ctx = disk_context(64);
  GridField tors = solve_torsion(ctx);
  auto [l1, eig] = solve_eigen_first(ctx.op, 1e-10);
  (void)l1;
  GridField zero(ctx.mask);

  auto a = normal_sign_check(tors);
  auto b = normal_sign_check(eig);
  auto c = normal_sign_check(zero);

  GrowthCheck g1 = boundary_growth_check(tors, 0.5, {1, 0}, {0, 0}, {0.2, 0.1, 0.05});
  GridField quad(ctx.mask);
  quad.fill([](Vec2 p) {
    double r2 = p.norm2();
    return (1 - r2) * (1 - r2) + 5.0 * std::exp(-20.0 * r2);
  });
  GrowthCheck g2 = boundary_growth_check(quad, 0.5, {1, 0}, {0, 0}, {0.2, 0.1, 0.05});

  bool ok = a.pass && b.pass && !c.pass && g1.pass && !g2.pass;
  report(8, ok,
         std::string("boundary diagnostics (hopf torsion=") + (a.pass ? "pass" : "fail") +
             ", hopf eigen=" + (b.pass ? "pass" : "fail") + ", hopf zero=" + (c.pass ? "pass" : "fail") +
             ", growth torsion=" + (g1.pass ? "pass" : "fail") +
             ", growth quad_decay=" + (g2.pass ? "pass" : "fail") + ")");
}

// 9. Structural identities: antisymmetry, scale equivariance, refinement.
void criterion9() {
  bool ok = true;
  std::string detail;

  {
    auto mask = square_mask(20);
    GridField u(mask);
    u.fill([](Vec2 p) { return std::sin(4.0 * p.x + 1.0) * std::cos(3.0 * p.y) + p.x * p.y; });
    GridField nu = negate(u);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> up(0.05, 0.95), ul(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
      Triple t{{up(rng), up(rng)}, {up(rng), up(rng)}, ul(rng)};
      worst = std::max(worst, std::abs(convexity_value(u, t) + convexity_value(nu, t)));
    }
    ok = ok && worst <= 1e-12;
    detail += " antisym=" + fmt(worst) + ";";

    SearchOptions so;
    so.lambda_steps = 8;
    double d1 = defect_sup(u, so).sup_value;
    double d2 = defect_sup(2.0 * u, so).sup_value;
    ok = ok && std::abs(d2 - 2.0 * d1) <= 1e-12;
    detail += " scale=" + fmt(std::abs(d2 - 2.0 * d1)) + ";";
  }
  {
    std::vector<int> grids{32, 64, 128};
    std::vector<double> errs;
    for (int n : grids) {
      auto ctx = disk_context(n);
      GridField u = solve_torsion(ctx);
      errs.push_back(std::abs(u.evaluate({0, 0}) - 0.25));
    }
    double slope = std::log(errs[0] / errs[2]) / std::log(4.0);
    // the boundary-fitted stencil is exact on this quadratic profile, so the
    // errors sit at solver precision; accept that as converged
    bool exact = errs[0] <= 1e-10 && errs[1] <= 1e-10 && errs[2] <= 1e-10;
    ok = ok && (slope >= 1.9 || exact);
    detail += " center_errs=" + fmt(errs[0]) + "," + fmt(errs[1]) + "," + fmt(errs[2]) +
              (exact ? " (discretely exact)" : " slope=" + fmt(slope));
  }
  report(9, ok, "structural identities (" + detail + ")");
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << '\n';
  return failures == 0 ? 0 : 1;
}
