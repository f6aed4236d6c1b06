#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "concavity/convexity.hpp"
#include "oracles.hpp"

using namespace clab;

namespace {

std::shared_ptr<const DomainMask> square_mask(int cells, double lo = -1.0, double hi = 1.0) {
  auto dom = ConvexDomain::polygon({{lo, lo}, {hi, lo}, {hi, hi}, {lo, hi}});
  double h = (hi - lo) / cells;
  GridSpec spec(cells + 5, cells + 5, {lo - 2 * h, hi + 2 * h, lo - 2 * h, hi + 2 * h});
  return std::make_shared<DomainMask>(build_mask(dom, spec));
}

std::shared_ptr<const DomainMask> disk_mask(double h) {
  auto dom = ConvexDomain::disk({0, 0}, 1.0);
  GridSpec spec = GridSpec::with_spacing({-1.0625, 1.0625, -1.0625, 1.0625}, h);
  return std::make_shared<DomainMask>(build_mask(dom, spec));
}

}  // namespace

TEST_CASE("convexity value formula examples") {
  auto mask = square_mask(16);
  GridField sq(mask);
  sq.fill([](Vec2 p) { return p.norm2(); });
  // convex field: nonpositive chord values, zero at degenerate triples
  CHECK(convexity_value(sq, {{0.5, 0.5}, {0.5, 0.5}, 0.3}) == Catch::Approx(0.0).margin(1e-12));
  CHECK(convexity_value(sq, {{-1, 0}, {1, 0}, 0.5}) <= 1e-12);

  // 1-D slice u = -x^2: C at y1=(-1,0), y3=(1,0), lambda=1/2 equals 1
  GridField neg(mask);
  neg.fill([](Vec2 p) { return -p.x * p.x; });
  CHECK(convexity_value(neg, {{-1, 0}, {1, 0}, 0.5}) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("convexity value matches the direct formula on random triples") {
  auto mask = square_mask(24);
  GridField u(mask);
  u.fill([](Vec2 p) { return p.x * p.x * p.x - 2.0 * p.y * p.y + 0.5 * p.x * p.y; });
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ur(-1.0, 1.0), ul(0.0, 1.0);
  double worst = 0.0, worst_anti = 0.0;
  GridField nu = negate(u);
  for (int k = 0; k < 10000; ++k) {
    Triple t{{ur(rng), ur(rng)}, {ur(rng), ur(rng)}, ul(rng)};
    double direct = u.evaluate(t.y2()) - t.lambda * u.evaluate(t.y1) - (1.0 - t.lambda) * u.evaluate(t.y3);
    double c = convexity_value(u, t);
    worst = std::max(worst, std::abs(c - direct));
    worst_anti = std::max(worst_anti, std::abs(convexity_value(nu, t) + c));
  }
  CHECK(worst <= 1e-12);
  CHECK(worst_anti <= 1e-12);  // C_{-u} = -C_u
}

TEST_CASE("joint convexity formula examples") {
  Nonlinearity aff;
  aff.b = [](Vec2 y, double s) { return 0.3 * y.x - 1.2 * y.y + 2.0 * s; };
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ur(-1.0, 1.0), ul(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    HCQuery q{{ur(rng), ur(rng)}, {ur(rng), ur(rng)}, ur(rng), ur(rng), ul(rng)};
    CHECK(std::abs(joint_convexity_value(aff, q)) <= 1e-12);
  }

  Nonlinearity s2;
  s2.b = [](Vec2, double s) { return s * s; };
  HCQuery q;
  q.s1 = 0.0;
  q.s3 = 2.0;
  q.lambda = 0.5;
  CHECK(joint_convexity_value(s2, q) == Catch::Approx(-1.0).margin(1e-14));

  Nonlinearity narrow = s2;
  narrow.smin = 0.0;
  narrow.smax = 1.0;
  CHECK_THROWS_AS(joint_convexity_value(narrow, q), std::domain_error);
}

TEST_CASE("harmonic convexity formula examples") {
  Nonlinearity c;
  c.b = [](Vec2, double) { return 2.5; };
  for (double lam : {0.0, 0.25, 0.5, 1.0}) {
    HCQuery q;
    q.lambda = lam;
    auto v = harmonic_convexity_value(c, q);
    REQUIRE(v.has_value());
    CHECK(*v == Catch::Approx(0.0).margin(1e-14));
  }

  // both endpoint values zero: HC reduces to the midpoint value
  CHECK(hc_combine(0.0, 0.0, 0.7, 0.3).value() == Catch::Approx(0.7));

  // g(s) = s, s1=1, s3=2, lambda=1/2: 1.5 - 2/1.5 = 1/6
  Nonlinearity lin;
  lin.b = [](Vec2, double s) { return s; };
  HCQuery q;
  q.s1 = 1.0;
  q.s3 = 2.0;
  q.lambda = 0.5;
  CHECK(harmonic_convexity_value(lin, q).value() == Catch::Approx(1.0 / 6.0).margin(1e-14));

  // negative mix is inadmissible
  CHECK_FALSE(hc_combine(-1.0, -1.0, 0.0, 0.5).has_value());
  CHECK(hc_case(1.0, 1.0, 0.5) == HCCase::PositiveMix);
  CHECK(hc_case(0.0, 0.0, 0.5) == HCCase::BothZero);
  CHECK(hc_case(-1.0, 0.0, 0.5) == HCCase::Inadmissible);
}

TEST_CASE("HC dominates C at admissible positive-mix queries") {
  Nonlinearity g;
  g.b = [](Vec2 y, double s) { return 0.2 + s * s + 0.3 * std::sin(2.0 * y.x + y.y); };
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ur(-1.0, 1.0), us(0.2, 2.0), ul(0.0, 1.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 20000; ++k) {
    HCQuery q{{ur(rng), ur(rng)}, {ur(rng), ur(rng)}, us(rng), us(rng), ul(rng)};
    auto hc = harmonic_convexity_value(g, q);
    if (!hc) continue;
    worst = std::max(worst, joint_convexity_value(g, q) - *hc);
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("defect sup of a concave paraboloid on the square") {
  auto mask = square_mask(16);
  GridField u(mask);
  u.fill([](Vec2 p) { return -p.norm2(); });
  SearchOptions so;
  auto rep = defect_sup(u, so);
  CHECK(rep.sup_value == Catch::Approx(2.0).margin(1e-12));  // opposite corners, lambda = 1/2
  CHECK(rep.argmax.lambda == Catch::Approx(0.5));
  CHECK((rep.argmax.y1 - rep.argmax.y3).norm() == Catch::Approx(2.0 * std::sqrt(2.0)).margin(1e-12));

  // the convex mirror has sup 0 at a degenerate triple
  auto rep2 = defect_sup(negate(u), so);
  CHECK(rep2.sup_value == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("defect sup equals the brute-force oracle exactly") {
  auto mask = square_mask(20);
  GridField u(mask);
  u.fill([](Vec2 p) { return std::sin(2.0 * p.x) * std::cos(1.5 * p.y) + 0.3 * p.x * p.y; });
  SearchOptions so;
  so.lambda_steps = 8;
  auto rep = defect_sup(u, so);
  double ref = oracle::brute_force_defect(u, 8);
  CHECK(rep.sup_value == ref);  // exact equality: same enumeration arithmetic
}

TEST_CASE("defect sup is scale-equivariant and lambda-grid monotone") {
  auto mask = disk_mask(1.0 / 12);
  GridField u(mask);
  u.fill([](Vec2 p) { return std::cos(3.0 * p.x) + p.y * p.y * p.y; });
  SearchOptions so;
  so.lambda_steps = 8;
  auto r1 = defect_sup(u, so);
  auto r2 = defect_sup(2.0 * u, so);
  CHECK(r2.sup_value == Catch::Approx(2.0 * r1.sup_value).margin(1e-12));

  // the refined lambda grid contains the coarse one, so the sup cannot drop
  SearchOptions fine = so;
  fine.lambda_steps = 16;
  CHECK(defect_sup(u, fine).sup_value >= r1.sup_value);
}

TEST_CASE("delta estimate for the concavity side") {
  auto mask = disk_mask(1.0 / 12);
  GridField u(mask);
  u.fill([](Vec2 p) { return 0.5 * (1.0 - p.norm2()); });  // range [0, 0.5]

  Nonlinearity lin;
  lin.b = [](Vec2, double s) { return s; };
  SearchOptions so;
  CHECK(delta_estimate_concavity(lin, u, so).sup_value == Catch::Approx(0.0).margin(1e-12));

  // b = s - s^2: cross-check against an independent exhaustive double loop
  // over the same composed chord functional
  Nonlinearity bq;
  bq.b = [](Vec2, double s) { return s - s * s; };
  auto rep = delta_estimate_concavity(bq, u, so);
  {
    const auto& sp = u.spec();
    std::vector<int> nodes;
    for (int j = 0; j < sp.ny; ++j)
      for (int i = 0; i < sp.nx; ++i)
        if (u.node_usable(sp.index(i, j))) nodes.push_back(sp.index(i, j));
    auto bval = [&](double s) { return s - s * s; };
    double best = -std::numeric_limits<double>::infinity();
    for (size_t a = 0; a < nodes.size(); ++a)
      for (size_t b = a; b < nodes.size(); ++b) {
        Vec2 p1 = sp.node(nodes[a] % sp.nx, nodes[a] / sp.nx);
        Vec2 p3 = sp.node(nodes[b] % sp.nx, nodes[b] / sp.nx);
        double v1 = bval(u.value(nodes[a])), v3 = bval(u.value(nodes[b]));
        for (int k = 0; k <= so.lambda_steps; ++k) {
          double lam = static_cast<double>(k) / so.lambda_steps;
          Vec2 y2 = lam * p1 + (1.0 - lam) * p3;
          best = std::max(best, -(bval(u.evaluate(y2)) - lam * v1 - (1.0 - lam) * v3));
        }
      }
    CHECK(rep.sup_value == Catch::Approx(std::max(0.0, best)).margin(1e-14));
  }

  // b concave along u: clamped delta is zero
  Nonlinearity bc;
  bc.b = [](Vec2, double s) { return std::sqrt(s + 0.1); };
  auto repc = delta_estimate_concavity(bc, u, so);
  CHECK(repc.sup_value <= 1e-10);
  CHECK(repc.raw_value <= repc.sup_value + 1e-15);
}

TEST_CASE("delta estimate for the harmonic side") {
  auto mask = disk_mask(1.0 / 12);
  GridField u(mask);
  u.fill([](Vec2 p) { return 0.5 * (1.0 - p.norm2()); });

  Nonlinearity c;
  c.b = [](Vec2, double) { return 1.7; };
  SearchOptions so;
  CHECK(delta_estimate_harmonic(c, u, so).sup_value == Catch::Approx(0.0).margin(1e-12));

  // positive concave along the chords: harmonic concave, delta = 0
  Nonlinearity pc;
  pc.b = [](Vec2 y, double) { return 2.0 - 0.5 * y.norm2(); };
  CHECK(delta_estimate_harmonic(pc, u, so).sup_value <= 1e-10);
}

TEST_CASE("beta estimates") {
  std::vector<Vec2> xs{{0, 0}, {0.5, 0.1}};
  Nonlinearity lin;
  lin.b = [](Vec2, double s) { return s; };
  CHECK(beta_estimate(lin, 1.0, xs).beta == Catch::Approx(1.0).margin(1e-9));

  Nonlinearity es;
  es.b = [](Vec2, double s) { return std::exp(s); };
  es.db_ds = [](Vec2, double s) { return std::exp(s); };
  auto rep = beta_estimate(es, 1.0, xs);
  CHECK(rep.beta == Catch::Approx(std::exp(-1.0)).margin(1e-12));
  CHECK(rep.arg_s == Catch::Approx(-1.0));
}

TEST_CASE("boundary growth check") {
  auto mask = disk_mask(1.0 / 48);
  GridField u(mask);
  u.fill([](Vec2 p) { return 0.25 * (1.0 - p.norm2()); });  // linear boundary growth
  std::vector<double> ts{0.2, 0.1, 0.05};
  Vec2 y{1.0, 0.0}, z{0.0, 0.0};
  auto g = boundary_growth_check(u, 0.5, y, z, ts);
  CHECK(g.pass);  // t^{-2} * O(t) diverges past u(0) = 0.25

  // quadratic boundary decay with a large interior value: the surrogate stays
  // bounded near 4 while the reference sits at 6
  GridField q(mask);
  q.fill([](Vec2 p) {
    double w = 1.0 - p.norm2();
    return w * w + 5.0 * std::exp(-20.0 * p.norm2());
  });
  auto gq = boundary_growth_check(q, 0.5, y, z, ts);
  CHECK(gq.surrogate < gq.reference);
  CHECK_FALSE(gq.pass);

  // zero reference edge case: pass iff the surrogate is strictly positive
  GridField zf(mask);
  CHECK_FALSE(boundary_growth_check(zf, 0.5, y, z, ts).pass);

  CHECK_THROWS_AS(boundary_growth_check(u, 1.5, y, z, ts), std::invalid_argument);
  CHECK_THROWS_AS(boundary_growth_check(u, 0.5, y, z, std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("normal sign check") {
  auto mask = disk_mask(1.0 / 32);
  GridField u(mask);
  u.fill([](Vec2 p) { return 0.25 * (1.0 - p.norm2()); });
  auto rep = normal_sign_check(u);
  CHECK(rep.pass);
  CHECK(rep.worst == Catch::Approx(-0.5).margin(0.05));

  GridField z(mask);
  CHECK_FALSE(normal_sign_check(z).pass);
}

TEST_CASE("harmonic concavity sub-additivity sweep") {
  Nonlinearity f, g;
  f.b = [](Vec2 x, double s) { return 2.0 + std::sin(x.x + s) * std::cos(x.y); };
  g.b = [](Vec2 x, double s) { return 1.5 + 0.5 * std::cos(x.x - s) * std::sin(x.y + 1.0); };
  auto rep = hc_subadd_check(f, g, {-1, 1, -1, 1}, -1.0, 1.0, 20000, 424242);
  CHECK(rep.sum_samples > 0);
  CHECK(rep.diff_samples > 0);
  CHECK(rep.sum_violation <= 1e-10);
  CHECK(rep.diff_violation <= 1e-10);
}

TEST_CASE("ratio and inverse convexity transfers") {
  auto dom = ConvexDomain::disk({0, 0}, 1.0);
  Nonlinearity g;
  g.b = [](Vec2 x, double s) { return 5.0 - 0.2 * (x.norm2() + s * s); };
  auto rr = ratio_convexity_check(g, dom, 4.0, 5.1, 1.0, 1e-3, 20000, 1);
  CHECK(rr.max_excess <= 1e-10);
  CHECK(rr.c1 == Catch::Approx(2.0 * 5.1 / 64.0));
  CHECK_THROWS_AS(ratio_convexity_check(g, dom, 1e-4, 5.1, 1.0, 1e-3, 10, 1), std::invalid_argument);

  Nonlinearity inv;
  inv.smin = -1.0;
  inv.smax = 1.0;
  inv.b = [](Vec2 x, double s) { return 1.0 / (0.5 + 0.1 * (x.norm2() + s * s)); };
  auto ir = inverse_convexity_check(inv, dom, 2.1, 1e-3, 20000, 2);
  CHECK(ir.samples > 0);
  CHECK(ir.worst_margin >= -1e-10);
  CHECK(ir.max_inv_defect <= 1e-3 + 1e-10);
}
