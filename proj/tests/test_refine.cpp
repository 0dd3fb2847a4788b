#include <doctest.h>

#include <cmath>

#include "lstmcert/oracle.hpp"
#include "lstmcert/refine.hpp"
#include "lstmcert/relax.hpp"
#include "lstmcert/rng.hpp"

using namespace lstmcert;

namespace {

double region_area_sum(const Division& d) {
  double sum = 0.0;
  for (const auto& r : d.regions) sum += r.area();
  return sum;
}

}  // namespace

TEST_CASE("strategy names round-trip") {
  for (DivisionStrategy s : all_strategies()) {
    const auto parsed = parse_strategy(strategy_name(s));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == s);
  }
  CHECK(!parse_strategy("8-tri").has_value());
}

TEST_CASE("divide: rectangular grids") {
  const Box2 unit{0, 1, 0, 1};
  SUBCASE("Rec4 quarters meet at the center") {
    const Division d = divide(unit, DivisionStrategy::Rec4);
    REQUIRE(d.regions.size() == 4);
    int touching = 0;
    for (const auto& r : d.regions) {
      REQUIRE(r.is_rectangle());
      const Box2& b = r.rectangle();
      CHECK(b.width() == doctest::Approx(0.5));
      if ((b.ux == 0.5 || b.lx == 0.5) && (b.uy == 0.5 || b.ly == 0.5)) ++touching;
    }
    CHECK(touching == 4);
  }
  SUBCASE("Rec16 tiles with sixteen quarter-side boxes") {
    const Division d = divide(unit, DivisionStrategy::Rec16);
    REQUIRE(d.regions.size() == 16);
    for (const auto& r : d.regions) CHECK(r.rectangle().width() == doctest::Approx(0.25));
    CHECK(region_area_sum(d) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("divide: triangular strategies") {
  const Box2 unit{0, 1, 0, 1};
  SUBCASE("Tri4 apexes at the center with equal areas") {
    const Division d = divide(unit, DivisionStrategy::Tri4);
    REQUIRE(d.regions.size() == 4);
    for (const auto& r : d.regions) {
      REQUIRE(!r.is_rectangle());
      CHECK(r.area() == doctest::Approx(0.25));
      bool has_center = false;
      for (const auto& v : r.triangle().v)
        has_center |= (v.x() == 0.5 && v.y() == 0.5);
      CHECK(has_center);
    }
  }
  SUBCASE("two-triangle splits cover the box") {
    for (DivisionStrategy s : {DivisionStrategy::TriUp2, DivisionStrategy::TriDown2}) {
      const Division d = divide(unit, s);
      REQUIRE(d.regions.size() == 2);
      CHECK(region_area_sum(d) == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("divide: tiling exactness across strategies and boxes") {
  Rng rng(21);
  for (int it = 0; it < 10; ++it) {
    const double lx = rng.uniform(-3, 3), ly = rng.uniform(-3, 3);
    const Box2 box{lx, lx + rng.uniform(0.01, 4.0), ly, ly + rng.uniform(0.01, 4.0)};
    for (DivisionStrategy s : all_strategies()) {
      const Division d = divide(box, s);
      CHECK(region_area_sum(d) == doctest::Approx(box.area()).epsilon(1e-12));
    }
  }
}

TEST_CASE("divide: degenerate boxes come back unchanged with the flag") {
  const Box2 flat{0, 1, 0.5, 0.5};
  const Division d = divide(flat, DivisionStrategy::Rec9);
  CHECK(d.degenerate);
  REQUIRE(d.regions.size() == 1);
  CHECK(d.regions[0].is_rectangle());
}

TEST_CASE("candidate_planes with strategy None is the single-plane result") {
  const Box2 box{-1, 1, -1, 1};
  RelaxConfig cfg;
  const CandidateSet set =
      candidate_planes(box, BivariateKind::SigTanh, DivisionStrategy::None, cfg);
  REQUIRE(set.count() == 1);
  const PlanePair single = relax(box, BivariateKind::SigTanh, cfg);
  // The lone candidate re-runs the same deterministic relaxation (with a
  // second, idempotent offset pass over the same region).
  CHECK(set.lower_planes[0].a == doctest::Approx(single.lower.a));
  CHECK(set.lower_planes[0].b == doctest::Approx(single.lower.b));
  CHECK(set.upper_planes[0].a == doctest::Approx(single.upper.a));
}

TEST_CASE("Rec4 candidates are globally sound after the full-box offset") {
  const Box2 box{-1, 1, -1, 1};
  RelaxConfig cfg;
  const CandidateSet set =
      candidate_planes(box, BivariateKind::SigTanh, DivisionStrategy::Rec4, cfg);
  REQUIRE(set.count() == 5);
  for (std::size_t k = 0; k < set.count(); ++k) {
    const PlanePair pair{set.lower_planes[k], set.upper_planes[k]};
    CHECK(dense_grid_soundness(pair, box, BivariateKind::SigTanh, 257) == 0);
  }
}

TEST_CASE("sub-region planes can violate globally until re-offset repairs them") {
  const Box2 box{-2, 2, -2, 2};
  RelaxConfig cfg;
  const Division d = divide(box, DivisionStrategy::Rec4);
  int pre_offset_violations = 0;
  for (const auto& region : d.regions) {
    const PlanePair local = relax_region(region, BivariateKind::SigTanh, cfg);
    pre_offset_violations +=
        dense_grid_soundness(local, box, BivariateKind::SigTanh, 129);
    const PlanePair repaired{offset_lower(local.lower, box, BivariateKind::SigTanh, 64),
                             offset_upper(local.upper, box, BivariateKind::SigTanh, 64)};
    CHECK(dense_grid_soundness(repaired, box, BivariateKind::SigTanh, 257) == 0);
  }
  CHECK(pre_offset_violations > 0);
}

TEST_CASE("combine is exact at simplex vertices and idempotent on duplicates") {
  const std::vector<PlaneCoeffs> cands{{1.0, 2.0, 3.0}, {-1.0, 0.5, 0.0}, {0.0, 0.0, 1.0}};
  Eigen::VectorXd vertex = Eigen::VectorXd::Zero(3);
  vertex(0) = 1.0;
  const PlaneCoeffs at_vertex = combine(cands, vertex);
  CHECK(at_vertex.a == 1.0);
  CHECK(at_vertex.b == 2.0);
  CHECK(at_vertex.c == 3.0);

  const std::vector<PlaneCoeffs> twins{{0.5, -0.25, 2.0}, {0.5, -0.25, 2.0}};
  Eigen::VectorXd half = Eigen::VectorXd::Constant(2, 0.5);
  const PlaneCoeffs mixed = combine(twins, half);
  CHECK(mixed.a == doctest::Approx(0.5));
  CHECK(mixed.b == doctest::Approx(-0.25));
  CHECK(mixed.c == doctest::Approx(2.0));
}

TEST_CASE("combine rejects weights off the simplex") {
  const std::vector<PlaneCoeffs> cands{{1, 0, 0}, {0, 1, 0}};
  Eigen::VectorXd bad(2);
  bad << 0.7, 0.4;
  CHECK_THROWS_AS(combine(cands, bad), std::invalid_argument);
  bad << 1.2, -0.2;
  CHECK_THROWS_AS(combine(cands, bad), std::invalid_argument);
}

TEST_CASE("random simplex combinations of Rec4 candidates stay sound") {
  const Box2 box{-1.5, 1.0, -0.5, 2.0};
  RelaxConfig cfg;
  const CandidateSet set =
      candidate_planes(box, BivariateKind::SigMul, DivisionStrategy::Rec4, cfg);
  Rng rng(44);
  for (int it = 0; it < 10; ++it) {
    Eigen::VectorXd lambda(static_cast<int>(set.count()));
    double sum = 0.0;
    for (int k = 0; k < lambda.size(); ++k) {
      lambda(k) = rng.uniform(0.0, 1.0);
      sum += lambda(k);
    }
    lambda /= sum;
    const PlanePair pair{combine(set.lower_planes, lambda), combine(set.upper_planes, lambda)};
    CHECK(dense_grid_soundness(pair, box, BivariateKind::SigMul, 257) == 0);
  }
}

TEST_CASE("project_to_simplex basics") {
  Eigen::VectorXd v(3);
  v << 2.0, 0.0, 0.0;
  const Eigen::VectorXd p = project_to_simplex(v);
  CHECK(p(0) == doctest::Approx(1.0));
  CHECK(p(1) == doctest::Approx(0.0));

  Eigen::VectorXd u = Eigen::VectorXd::Constant(4, 0.25);
  const Eigen::VectorXd q = project_to_simplex(u);
  for (int i = 0; i < 4; ++i) CHECK(q(i) == doctest::Approx(0.25));

  Eigen::VectorXd w(2);
  w << 0.9, -0.4;
  const Eigen::VectorXd r = project_to_simplex(w);
  CHECK(r.sum() == doctest::Approx(1.0));
  CHECK(r.minCoeff() >= 0.0);
}

TEST_CASE("optimize_lambda leaves a constant objective at its initialization") {
  const auto objective = [](const Eigen::VectorXd&) { return -1.0; };
  Eigen::VectorXd init = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  SimplexBlocks blocks{{{0, 3}}};
  const AscentResult res = optimize_lambda(objective, init, blocks, AscentSchedule{});
  CHECK(res.best_margin == -1.0);
  CHECK((res.lambda - init).norm() == 0.0);
}

TEST_CASE("optimize_lambda converges to the analytic simplex optimum") {
  Eigen::VectorXd target = Eigen::VectorXd::Zero(3);
  target(1) = 1.0;
  const auto objective = [&](const Eigen::VectorXd& l) { return -(l - target).squaredNorm(); };
  Eigen::VectorXd init = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  SimplexBlocks blocks{{{0, 3}}};
  AscentSchedule schedule;
  schedule.step = 0.25;
  schedule.decay_every = 1000;  // keep the step fixed for this quadratic
  const AscentResult res = optimize_lambda(objective, init, blocks, schedule);
  CHECK((res.lambda - target).norm() <= 1e-3);
  CHECK(res.iterations <= 100);
}

TEST_CASE("optimize_lambda never returns less than the initial margin") {
  Rng rng(66);
  // A jagged objective with plateaus and cliffs.
  const auto objective = [](const Eigen::VectorXd& l) {
    return std::sin(7.0 * l(0)) - 0.5 * std::abs(l(1) - 0.2) - (l(2) > 0.6 ? 1.0 : 0.0);
  };
  for (int it = 0; it < 10; ++it) {
    Eigen::VectorXd init(3);
    for (int i = 0; i < 3; ++i) init(i) = rng.uniform(0.0, 1.0);
    init = project_to_simplex(init);
    SimplexBlocks blocks{{{0, 3}}};
    const AscentResult res = optimize_lambda(objective, init, blocks, AscentSchedule{});
    CHECK(res.best_margin >= objective(init) - 1e-15);
  }
}
