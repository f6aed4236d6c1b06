#include <catch2/catch_amalgamated.hpp>
#include <sstream>

#include "concavity/config.hpp"
#include "concavity/report.hpp"

using namespace clab;

TEST_CASE("config parsing") {
  std::istringstream is(
      "# a comment\n"
      "domain.kind = disk\n"
      "domain.radius = 0.8  # trailing comment\n"
      "gamma=0.5\n"
      "eps.list = 0.1, 0.01,0.001\n"
      "name = torsion run\n"
      "\n"
      "not a key value line\n");
  Config c = Config::parse(is);
  CHECK(c.has("gamma"));
  CHECK_FALSE(c.has("missing"));
  CHECK(c.num("gamma") == Catch::Approx(0.5));
  CHECK(c.num("absent", 2.0) == Catch::Approx(2.0));
  CHECK(c.integer("absent", 7) == 7);
  CHECK(c.str("name") == "torsion run");
  CHECK_THROWS_AS(c.str("missing"), std::runtime_error);
  auto xs = c.numbers("eps.list");
  REQUIRE(xs.size() == 3);
  CHECK(xs[0] == Catch::Approx(0.1));
  CHECK(xs[2] == Catch::Approx(0.001));

  auto dom = c.domain();
  CHECK(dom.kind() == ConvexDomain::Kind::Disk);
  CHECK(dom.semi_axis_a() == Catch::Approx(0.8));
  auto spec = c.grid(dom);
  CHECK(spec.bbox.xmin == Catch::Approx(-0.8625));  // default margin 0.0625
}

TEST_CASE("config domain variants") {
  {
    std::istringstream is("domain.kind=ellipse\ndomain.a=2\ndomain.b=1\n");
    auto dom = Config::parse(is).domain();
    CHECK(dom.kind() == ConvexDomain::Kind::Ellipse);
  }
  {
    std::istringstream is("domain.kind=polygon\ndomain.xs=0,1,1,0\ndomain.ys=0,0,1,1\n");
    auto dom = Config::parse(is).domain();
    CHECK(dom.kind() == ConvexDomain::Kind::Polygon);
    CHECK(dom.vertices().size() == 4);
  }
  {
    std::istringstream is("domain.kind=polygon\ndomain.xs=0,1\ndomain.ys=0,0,1\n");
    CHECK_THROWS_AS(Config::parse(is).domain(), std::runtime_error);
  }
  {
    std::istringstream is("domain.kind=blob\n");
    CHECK_THROWS_AS(Config::parse(is).domain(), std::runtime_error);
  }
}

TEST_CASE("grid from spacing forces odd counts") {
  std::istringstream is("domain.kind=disk\ndomain.radius=1\ngrid.h=0.0625\n");
  Config c = Config::parse(is);
  auto dom = c.domain();
  auto spec = c.grid(dom);
  CHECK(spec.nx % 2 == 1);
  CHECK(spec.ny % 2 == 1);
  CHECK(spec.h() <= 0.0625 * 1.05);
}

TEST_CASE("defect report JSON round trip") {
  DefectReport r;
  r.sup_value = 0.125;
  r.raw_value = 0.1;
  r.argmax = {{-0.5, 0.25}, {0.75, -1.0}, 0.3125};
  r.location_class = "boundary";
  r.evaluations = 123456;
  r.inadmissible = 7;
  r.lambda_steps = 16;
  r.endpoints_used = 280;
  r.z_samples = 33;

  json j = to_json(r);
  DefectReport s = defect_from_json(j);
  CHECK(s.sup_value == r.sup_value);
  CHECK(s.raw_value == r.raw_value);
  CHECK(s.argmax.y1.x == r.argmax.y1.x);
  CHECK(s.argmax.y3.y == r.argmax.y3.y);
  CHECK(s.argmax.lambda == r.argmax.lambda);
  CHECK(s.location_class == r.location_class);
  CHECK(s.evaluations == r.evaluations);
  CHECK(s.inadmissible == r.inadmissible);
  CHECK(s.lambda_steps == r.lambda_steps);
  CHECK(s.endpoints_used == r.endpoints_used);
  CHECK(s.z_samples == r.z_samples);

  // serialized form parses back to the same JSON
  json j2 = json::parse(j.dump());
  CHECK(j2 == j);
}

TEST_CASE("solve report serialization") {
  SolveReport r;
  r.iterations = 12;
  r.residual = 3.5e-11;
  r.converged = true;
  r.damping_history = {0, 1, 0};
  r.message = "ok";
  json j = to_json(r);
  CHECK(j["iterations"] == 12);
  CHECK(j["converged"] == true);
  CHECK(j["damping_history"].size() == 3);
  CHECK(json::parse(j.dump()) == j);
}
