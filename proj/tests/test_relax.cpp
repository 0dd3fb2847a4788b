#include <doctest.h>

#include <cmath>

#include "lstmcert/lp.hpp"
#include "lstmcert/oracle.hpp"
#include "lstmcert/relax.hpp"
#include "lstmcert/rng.hpp"

using namespace lstmcert;

namespace {

RelaxConfig cfg_with(RelaxMethod m, double alpha = 0.674) {
  RelaxConfig cfg;
  cfg.method = m;
  cfg.alpha = alpha;
  return cfg;
}

LpProblem build_volume_lp(const Box2& box, BivariateKind kind, const RelaxConfig& cfg) {
  LpProblem lp = LpProblem::with_vars(6);
  const double mx = box.mid_x(), my = box.mid_y();
  lp.objective.resize(6);
  lp.objective << mx, my, 1.0, -mx, -my, -1.0;
  lp.objective *= box.area() > 0.0 ? box.area() : 1.0;
  Eigen::VectorXd row = Eigen::VectorXd::Zero(6);
  for (const auto& [x, y] : sample_points(box, cfg.sample_density)) {
    const double f = eval_bivariate(kind, x, y);
    row.setZero();
    row(0) = x;
    row(1) = y;
    row(2) = 1.0;
    lp.add_ge(row, f);
    row.setZero();
    row(3) = x;
    row(4) = y;
    row(5) = 1.0;
    lp.add_le(row, f);
  }
  return lp;
}

LpProblem build_hybrid_lp(const Box2& box, BivariateKind kind, int density, double alpha) {
  LpProblem lp = LpProblem::with_vars(6);
  const double mx = box.mid_x(), my = box.mid_y();
  lp.objective.resize(6);
  lp.objective << mx, my, 1.0, -mx, -my, -1.0;
  lp.objective *= alpha;
  Eigen::VectorXd row = Eigen::VectorXd::Zero(6);
  for (const auto& [x, y] : sample_points(box, density)) {
    const double f = eval_bivariate(kind, x, y);
    row.setZero();
    row(0) = x;
    row(1) = y;
    row(2) = 1.0;
    lp.add_ge(row, f);
    row.setZero();
    row(3) = x;
    row(4) = y;
    row(5) = 1.0;
    lp.add_le(row, f);
  }
  std::vector<LinTerm> terms;
  for (int side = 0; side < 2; ++side) {
    for (const auto& [cx, cy] : box.corners()) {
      LinTerm t;
      t.coeffs = Eigen::VectorXd::Zero(6);
      t.coeffs(side == 0 ? 0 : 3) = cx - mx;
      t.coeffs(side == 0 ? 1 : 4) = cy - my;
      terms.push_back(std::move(t));
    }
  }
  encode_abs_terms(lp, terms, Eigen::VectorXd::Constant(8, 1.0 - alpha));
  return lp;
}

double hybrid_objective(const PlanePair& pair, const Box2& box, double alpha) {
  return alpha * centroid_height(pair, box) + (1.0 - alpha) * surface_proxy(pair, box);
}

}  // namespace

TEST_CASE("eval_bivariate spot values") {
  CHECK(eval_bivariate(BivariateKind::SigTanh, 0.0, 0.0) == 0.0);
  CHECK(eval_bivariate(BivariateKind::SigMul, 0.0, 3.0) == doctest::Approx(1.5).epsilon(1e-15));
  // High-precision reference values.
  CHECK(eval_bivariate(BivariateKind::SigTanh, 1.0, -1.0) ==
        doctest::Approx(-0.55676994114593974427).epsilon(1e-14));
  CHECK(eval_bivariate(BivariateKind::SigTanh, 0.5, 0.3) ==
        doctest::Approx(0.18133025391728232568).epsilon(1e-14));
  CHECK(eval_bivariate(BivariateKind::SigMul, -2.0, -1.25) ==
        doctest::Approx(-0.14900365252764694493).epsilon(1e-14));
  CHECK(eval_bivariate(BivariateKind::SigTanh, 3.0, 2.0) ==
        doctest::Approx(0.91830773032346458796).epsilon(1e-14));
}

TEST_CASE("sample_points grids") {
  const Box2 unit{0, 1, 0, 1};
  SUBCASE("density 2 gives exactly the corners") {
    const auto pts = sample_points(unit, 2);
    REQUIRE(pts.size() == 4);
    CHECK(pts.front() == std::pair{0.0, 0.0});
    CHECK(pts.back() == std::pair{1.0, 1.0});
  }
  SUBCASE("density 3 includes the center") {
    const auto pts = sample_points(unit, 3);
    REQUIRE(pts.size() == 9);
    bool center = false;
    for (const auto& [x, y] : pts) center |= (x == 0.5 && y == 0.5);
    CHECK(center);
  }
  SUBCASE("triangle lattice has n(n+1)/2 points including vertices") {
    const Triangle2 t{{Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)}};
    const auto pts = sample_points(Region2(t), 3);
    REQUIRE(pts.size() == 6);
    int vertices = 0;
    for (const auto& [x, y] : pts) {
      if ((x == 0 && y == 0) || (x == 1 && y == 0) || (x == 0 && y == 1)) ++vertices;
    }
    CHECK(vertices == 3);
  }
}

TEST_CASE("relax_distance on a degenerate SigMul slice reproduces 0.5*y") {
  const Box2 slice{0, 0, -1, 2};
  const PlanePair pair =
      relax_distance(slice, BivariateKind::SigMul, cfg_with(RelaxMethod::Distance));
  for (double y : {-1.0, -0.25, 0.0, 1.0, 2.0}) {
    CHECK(pair.lower.eval(0.0, y) == doctest::Approx(0.5 * y).epsilon(1e-9));
    CHECK(pair.upper.eval(0.0, y) == doctest::Approx(0.5 * y).epsilon(1e-9));
  }
}

TEST_CASE("relax_distance is sound on a dense grid") {
  const Box2 box{-1, 1, -1, 1};
  const PlanePair pair =
      relax_distance(box, BivariateKind::SigTanh, cfg_with(RelaxMethod::Distance));
  CHECK(dense_grid_soundness(pair, box, BivariateKind::SigTanh, 101) == 0);
}

TEST_CASE("relax handles a point box exactly") {
  const Box2 point{0, 0, 0, 0};
  const PlanePair pair = relax(point, BivariateKind::SigTanh, cfg_with(RelaxMethod::Hybrid));
  CHECK(pair.lower.c == doctest::Approx(0.0));
  CHECK(pair.upper.c == doctest::Approx(0.0));
}

TEST_CASE("relax_volume preconditions and flat slice") {
  CHECK_THROWS_AS(
      relax_volume(Box2{0, 0, 0, 0}, BivariateKind::SigTanh, cfg_with(RelaxMethod::Volume)),
      std::invalid_argument);

  // y pinned at zero: the surface is identically zero along the slice.
  const Box2 flat{-2, 2, 0, 0};
  const PlanePair pair = relax_volume(flat, BivariateKind::SigTanh, cfg_with(RelaxMethod::Volume));
  CHECK(std::abs(centroid_height(pair, flat)) <= 1e-9);
  for (double x : {-2.0, 0.0, 2.0}) {
    CHECK(pair.lower.eval(x, 0.0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(pair.upper.eval(x, 0.0) == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("volume objective beats the distance planes' prism") {
  const Box2 box{-2, 2, -2, 2};
  const PlanePair vol = relax_volume(box, BivariateKind::SigTanh, cfg_with(RelaxMethod::Volume));
  const PlanePair dist =
      relax_distance(box, BivariateKind::SigTanh, cfg_with(RelaxMethod::Distance));
  // Both pairs carry grid offsets; tolerate that additive wobble.
  CHECK(prism_volume(vol, box) <= prism_volume(dist, box) + 1e-6);
}

TEST_CASE("volume LP optimum admits no improvement at its own solution") {
  const Box2 box{-1.5, 0.5, -0.75, 2.0};
  LpProblem lp = build_volume_lp(box, BivariateKind::SigTanh, cfg_with(RelaxMethod::Volume));
  const LpSolution first = solve(lp);
  REQUIRE(first.status == LpStatus::Optimal);
  for (int j = 0; j < 6; ++j) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(6);
    row(j) = 1.0;
    lp.add_eq(row, first.values(j));
  }
  const LpSolution pinned = solve(lp);
  REQUIRE(pinned.status == LpStatus::Optimal);
  CHECK(std::abs(pinned.objective_value - first.objective_value) <= 1e-7);
}

TEST_CASE("hybrid with alpha=1 matches the volume objective") {
  const Box2 box{-1, 1.5, -0.5, 1};
  const PlanePair hyb =
      relax_hybrid(box, BivariateKind::SigTanh, cfg_with(RelaxMethod::Hybrid, 1.0));
  const PlanePair vol = relax_volume(box, BivariateKind::SigTanh, cfg_with(RelaxMethod::Volume));
  CHECK(centroid_height(hyb, box) == doctest::Approx(centroid_height(vol, box)).epsilon(1e-7));
}

TEST_CASE("hybrid at the default alpha: soundness and objective recomputation") {
  const Box2 box{-1, 1, -1, 1};
  const RelaxConfig cfg = cfg_with(RelaxMethod::Hybrid);
  const PlanePair pair = relax_hybrid(box, BivariateKind::SigTanh, cfg);
  CHECK(dense_grid_soundness(pair, box, BivariateKind::SigTanh, 101) == 0);
  CHECK(pair.upper.eval(box.mid_x(), box.mid_y()) >=
        eval_bivariate(BivariateKind::SigTanh, box.mid_x(), box.mid_y()));
  CHECK(pair.lower.eval(box.mid_x(), box.mid_y()) <=
        eval_bivariate(BivariateKind::SigTanh, box.mid_x(), box.mid_y()));

  LpProblem lp = build_hybrid_lp(box, BivariateKind::SigTanh, cfg.sample_density, cfg.alpha);
  const LpSolution sol = solve(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  const PlanePair raw{{sol.values(3), sol.values(4), sol.values(5)},
                      {sol.values(0), sol.values(1), sol.values(2)}};
  CHECK(sol.objective_value ==
        doctest::Approx(hybrid_objective(raw, box, cfg.alpha)).epsilon(1e-7));
}

TEST_CASE("hybrid optimum dominates the distance planes in its own objective") {
  Rng rng(99);
  const double alpha = 0.674;
  for (int it = 0; it < 40; ++it) {
    const double cx = rng.uniform(-1, 1), cy = rng.uniform(-1, 1);
    const double wx = rng.uniform(0.05, 2.0), wy = rng.uniform(0.05, 2.0);
    const Box2 box{cx - wx, cx + wx, cy - wy, cy + wy};
    const BivariateKind kind = rng.coin() ? BivariateKind::SigTanh : BivariateKind::SigMul;

    LpProblem lp = build_hybrid_lp(box, kind, 10, alpha);
    const LpSolution hyb = solve(lp);
    REQUIRE(hyb.status == LpStatus::Optimal);

    // Distance optima over the same samples, evaluated in the hybrid metric.
    const auto pts = sample_points(box, 10);
    double sx = 0, sy = 0;
    for (const auto& [x, y] : pts) {
      sx += x;
      sy += y;
    }
    PlanePair dist;
    for (int side = 0; side < 2; ++side) {
      const bool upper = side == 1;
      LpProblem dlp = LpProblem::with_vars(3);
      dlp.objective.resize(3);
      dlp.objective << (upper ? sx : -sx), (upper ? sy : -sy),
          (upper ? static_cast<double>(pts.size()) : -static_cast<double>(pts.size()));
      Eigen::VectorXd drow(3);
      for (const auto& [x, y] : pts) {
        drow << x, y, 1.0;
        const double f = eval_bivariate(kind, x, y);
        if (upper)
          dlp.add_ge(drow, f);
        else
          dlp.add_le(drow, f);
      }
      const LpSolution ds = solve(dlp);
      REQUIRE(ds.status == LpStatus::Optimal);
      if (upper)
        dist.upper = {ds.values(0), ds.values(1), ds.values(2)};
      else
        dist.lower = {ds.values(0), ds.values(1), ds.values(2)};
    }
    CHECK(hyb.objective_value <= hybrid_objective(dist, box, alpha) + 1e-8);
  }
}

TEST_CASE("soundness_offset leaves globally valid planes unchanged") {
  const Box2 box{-1, 1, -1, 1};
  const double peak = sigmoid(1.0) * std::tanh(1.0);
  const PlanePair pair{{0, 0, -peak - 0.05}, {0, 0, peak + 0.05}};
  const PlanePair out = soundness_offset(pair, box, BivariateKind::SigTanh, 64);
  CHECK(out.lower.c == pair.lower.c);
  CHECK(out.upper.c == pair.upper.c);
}

TEST_CASE("soundness_offset repairs a deliberately violated pair") {
  const Box2 box{-1, 1, -1, 1};
  const double fc = eval_bivariate(BivariateKind::SigTanh, 0, 0);
  const double peak = sigmoid(1.0) * std::tanh(1.0);
  const PlanePair bad{{0, 0, -10.0}, {0, 0, fc - 1.0}};
  const PlanePair out = soundness_offset(bad, box, BivariateKind::SigTanh, 256);
  CHECK(out.upper.c - bad.upper.c >= peak - (fc - 1.0) - 1e-6);
  CHECK(dense_grid_soundness(out, box, BivariateKind::SigTanh, 257) == 0);
}

TEST_CASE("soundness_offset on a point region is exact") {
  const Box2 point{0.3, 0.3, -0.2, -0.2};
  const double f = eval_bivariate(BivariateKind::SigMul, 0.3, -0.2);
  const PlanePair bad{{0, 0, f + 0.5}, {0, 0, f - 0.5}};
  const PlanePair out = soundness_offset(bad, point, BivariateKind::SigMul, 64);
  CHECK(out.lower.c == doctest::Approx(f).epsilon(1e-15));
  CHECK(out.upper.c == doctest::Approx(f).epsilon(1e-15));
}

TEST_CASE("prism_volume closed forms") {
  const Box2 unit{0, 1, 0, 1};
  CHECK(prism_volume({{0, 0, 0}, {0, 0, 1}}, unit) == doctest::Approx(1.0));
  // Wedge: upper z = x, lower z = 0.
  CHECK(prism_volume({{0, 0, 0}, {1, 0, 0}}, unit) == doctest::Approx(0.5));
}

TEST_CASE("prism_volume matches the tetrahedral oracle on seeded pairs") {
  Rng rng(31);
  for (int it = 0; it < 200; ++it) {
    const double lx = rng.uniform(-2, 1), ly = rng.uniform(-2, 1);
    const Box2 box{lx, lx + rng.uniform(0.1, 3.0), ly, ly + rng.uniform(0.1, 3.0)};
    const PlaneCoeffs up{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(4.0, 6.0)};
    const PlaneCoeffs lo{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-2.0, 0.0)};
    const PlanePair pair{lo, up};

    const PlaneCoeffs diff{up.a - lo.a, up.b - lo.b, up.c - lo.c};
    const std::vector<Eigen::Vector2d> base{{box.lx, box.ly},
                                            {box.ux, box.ly},
                                            {box.ux, box.uy},
                                            {box.lx, box.uy}};
    const PolyPrism prism = PolyPrism::from_plane(base, diff);
    const double exact = poly_prism_volume_exact(prism);
    CHECK(prism_volume(pair, box) == doctest::Approx(exact).epsilon(1e-9));
  }
}

TEST_CASE("surface_proxy closed forms") {
  const Box2 unit{0, 1, 0, 1};
  CHECK(surface_proxy({{0, 0, 0.25}, {0, 0, 1}}, unit) == 0.0);
  // Upper z = x has corner deviations {0.5, 0.5, 0.5, 0.5}.
  CHECK(surface_proxy({{0, 0, 0}, {1, 0, 0}}, unit) == doctest::Approx(2.0));
}

TEST_CASE("surface_proxy degenerate coplanar top sums to 2*z2") {
  // Top plane pinned to zero at (a, b); z1 = z2 + z3 by coplanarity.
  const double a = 1.5, b = 0.75, z2 = 1.2, z3 = 0.4;
  const PlaneCoeffs top{-z2 / a, -z3 / b, z2 + z3};
  const Box2 box{0, a, 0, b};
  const PlanePair pair{{0, 0, 0}, top};
  CHECK(surface_proxy(pair, box) == doctest::Approx(2.0 * z2).epsilon(1e-12));
}

TEST_CASE("centroid_height behaviour") {
  const Box2 unit{0, 1, 0, 1};
  CHECK(centroid_height({{0, 0, 0}, {0, 0, 1}}, unit) == doctest::Approx(1.0));
  // Crossed planes keep their sign.
  CHECK(centroid_height({{0, 0, 1}, {0, 0, 0}}, unit) == doctest::Approx(-1.0));
  // Corner mean equals the centroid value for any plane pair.
  Rng rng(17);
  for (int it = 0; it < 100; ++it) {
    const PlanePair pair{{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)},
                         {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)}};
    const Box2 box{rng.uniform(-2, 0), rng.uniform(0.1, 2), rng.uniform(-2, 0),
                   rng.uniform(0.1, 2)};
    double corner_mean = 0.0;
    for (const auto& [x, y] : box.corners())
      corner_mean += 0.25 * (pair.upper.eval(x, y) - pair.lower.eval(x, y));
    CHECK(centroid_height(pair, box) == doctest::Approx(corner_mean).epsilon(1e-12));
  }
}

TEST_CASE("offset-corrected planes are sound across methods, kinds and scales") {
  Rng rng(2718);
  for (int it = 0; it < 12; ++it) {
    const double hx = std::exp(rng.uniform(std::log(1e-3), std::log(4.0)));
    const double hy = std::exp(rng.uniform(std::log(1e-3), std::log(4.0)));
    const double cx = rng.uniform(-2, 2), cy = rng.uniform(-2, 2);
    const Box2 box{cx - hx, cx + hx, cy - hy, cy + hy};
    for (BivariateKind kind : {BivariateKind::SigTanh, BivariateKind::SigMul}) {
      for (RelaxMethod method :
           {RelaxMethod::Distance, RelaxMethod::Volume, RelaxMethod::Hybrid}) {
        const PlanePair pair = relax(box, kind, cfg_with(method));
        CHECK(dense_grid_soundness(pair, box, kind, 129) == 0);
      }
    }
  }
}
