#include "lstmcert/relax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lstmcert/lp.hpp"

namespace lstmcert {

namespace {

// Edge cell coverage radius, per axis, of a grid with n points on [0, len].
double cell_step(double len, int n) { return n > 1 ? len / (n - 1) : 0.0; }

struct Range {
  double lo = 0, hi = 0;
};

Range mul_range(Range a, Range b) {
  const double p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
  return {std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4})};
}

double sigma_prime(double x) {
  const double s = sigmoid(x);
  return s * (1.0 - s);
}

// sigma' and sech^2 are unimodal with their peak at zero.
Range sigma_prime_range(double lo, double hi) {
  const double a = sigma_prime(lo), b = sigma_prime(hi);
  const double peak = (lo <= 0.0 && hi >= 0.0) ? 0.25 : std::max(a, b);
  return {std::min(a, b), peak};
}

double sech2(double y) {
  const double t = std::tanh(y);
  return 1.0 - t * t;
}

Range sech2_range(double lo, double hi) {
  const double a = sech2(lo), b = sech2(hi);
  const double peak = (lo <= 0.0 && hi >= 0.0) ? 1.0 : std::max(a, b);
  return {std::min(a, b), peak};
}

// Ranges of the partial derivatives of f over the box; combined with the
// plane slope they give the Lipschitz constant of (f - plane) per axis.
void partial_ranges(BivariateKind kind, const Box2& bb, Range* dx, Range* dy) {
  if (kind == BivariateKind::SigTanh) {
    *dx = mul_range(sigma_prime_range(bb.lx, bb.ux),
                    {std::tanh(bb.ly), std::tanh(bb.uy)});
    *dy = mul_range({sigmoid(bb.lx), sigmoid(bb.ux)}, sech2_range(bb.ly, bb.uy));
  } else {
    *dx = mul_range(sigma_prime_range(bb.lx, bb.ux), {bb.ly, bb.uy});
    *dy = {sigmoid(bb.lx), sigmoid(bb.ux)};
  }
}

double slope_gap(Range r, double coef) {
  return std::max(std::abs(r.lo - coef), std::abs(r.hi - coef));
}

struct OffsetGrid {
  std::vector<std::pair<double, double>> points;
  double rx = 0, ry = 0;  // coverage radius per axis
};

// Absorbs plane/surface evaluation roundoff in the offset bound, which is
// otherwise exact-to-zero at the binding grid point.
constexpr double kOffsetSafety = 1e-12;

double grid_coord(double lo, double hi, int i, int n) {
  if (n == 1) return lo;
  if (i == 0) return lo;
  if (i == n - 1) return hi;  // exact endpoints; i/(n-1) scaling can overshoot
  return lo + (hi - lo) * i / (n - 1);
}

OffsetGrid offset_points(const Region2& region, int grid_n) {
  OffsetGrid g;
  const Box2 bb = region.bounding_box();
  const int nx = bb.width() > 0 ? std::max(grid_n, 2) : 1;
  const int ny = bb.height() > 0 ? std::max(grid_n, 2) : 1;
  const double sx = cell_step(bb.width(), nx);
  const double sy = cell_step(bb.height(), ny);
  g.rx = 0.5 * sx;
  g.ry = 0.5 * sy;
  // Every region point is within (rx, ry) of a kept grid point: rectangles
  // keep the whole lattice; triangles keep points whose signed edge distances
  // are >= -(half cell diagonal), which covers the nearest grid neighbor of
  // any interior point, plus the vertices themselves.
  const bool rect = region.is_rectangle();
  const double slack = rect ? 0.0 : 0.5 * std::hypot(sx, sy) + 1e-12;
  for (int i = 0; i < nx; ++i) {
    const double x = grid_coord(bb.lx, bb.ux, i, nx);
    for (int j = 0; j < ny; ++j) {
      const double y = grid_coord(bb.ly, bb.uy, j, ny);
      if (rect || region.contains(x, y, slack)) g.points.push_back({x, y});
    }
  }
  if (!rect) {
    for (const auto& v : region.triangle().v) g.points.push_back({v.x(), v.y()});
  }
  return g;
}

}  // namespace

std::array<std::pair<double, double>, 4> Box2::corners() const {
  return {std::pair{lx, ly}, {ux, ly}, {lx, uy}, {ux, uy}};
}

double Triangle2::area() const {
  const Eigen::Vector2d e1 = v[1] - v[0];
  const Eigen::Vector2d e2 = v[2] - v[0];
  return 0.5 * std::abs(e1.x() * e2.y() - e1.y() * e2.x());
}

Region2::Region2(const Triangle2& tri) : shape_(tri) {
  double diam = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) diam = std::max(diam, (tri.v[i] - tri.v[j]).norm());
  if (!(tri.area() > 1e-12 * diam * diam))
    throw std::invalid_argument("Region2: collinear triangle vertices");
}

Box2 Region2::bounding_box() const {
  if (is_rectangle()) return rectangle();
  const auto& t = triangle();
  Box2 bb{t.v[0].x(), t.v[0].x(), t.v[0].y(), t.v[0].y()};
  for (const auto& p : t.v) {
    bb.lx = std::min(bb.lx, p.x());
    bb.ux = std::max(bb.ux, p.x());
    bb.ly = std::min(bb.ly, p.y());
    bb.uy = std::max(bb.uy, p.y());
  }
  return bb;
}

double Region2::area() const {
  return is_rectangle() ? rectangle().area() : triangle().area();
}

bool Region2::contains(double x, double y, double slack) const {
  if (is_rectangle()) {
    const Box2& b = rectangle();
    return x >= b.lx - slack && x <= b.ux + slack && y >= b.ly - slack && y <= b.uy + slack;
  }
  const auto& t = triangle();
  const double orient = (t.v[1] - t.v[0]).x() * (t.v[2] - t.v[0]).y() -
                        (t.v[1] - t.v[0]).y() * (t.v[2] - t.v[0]).x();
  const double sign = orient >= 0 ? 1.0 : -1.0;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector2d a = t.v[i];
    const Eigen::Vector2d b = t.v[(i + 1) % 3];
    const double len = (b - a).norm();
    const double cross = (b.x() - a.x()) * (y - a.y()) - (b.y() - a.y()) * (x - a.x());
    if (sign * cross / len < -slack) return false;
  }
  return true;
}

double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double eval_bivariate(BivariateKind kind, double x, double y) {
  return kind == BivariateKind::SigTanh ? sigmoid(x) * std::tanh(y) : sigmoid(x) * y;
}

std::vector<std::pair<double, double>> sample_points(const Region2& region, int density) {
  if (density < 2) throw std::invalid_argument("sample_points: density must be >= 2");
  std::vector<std::pair<double, double>> pts;
  if (region.is_rectangle()) {
    const Box2& b = region.rectangle();
    pts.reserve(static_cast<std::size_t>(density) * density);
    for (int i = 0; i < density; ++i) {
      const double x = grid_coord(b.lx, b.ux, i, density);
      for (int j = 0; j < density; ++j) {
        pts.push_back({x, grid_coord(b.ly, b.uy, j, density)});
      }
    }
  } else {
    const auto& t = region.triangle();
    for (int i = 0; i < density; ++i) {
      for (int j = 0; j + i < density; ++j) {
        const double a = static_cast<double>(i) / (density - 1);
        const double b = static_cast<double>(j) / (density - 1);
        const Eigen::Vector2d p = t.v[0] + a * (t.v[1] - t.v[0]) + b * (t.v[2] - t.v[0]);
        pts.push_back({p.x(), p.y()});
      }
    }
  }
  return pts;
}

PlanePair relax_distance(const Region2& region, BivariateKind kind, const RelaxConfig& cfg) {
  const auto pts = sample_points(region, cfg.sample_density);
  double sx = 0, sy = 0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
  }
  const double n = static_cast<double>(pts.size());

  PlanePair pair;
  for (int side = 0; side < 2; ++side) {
    const bool upper = side == 1;
    LpProblem lp = LpProblem::with_vars(3);
    // Lower: max sum of plane values below f. Upper: min sum above f. Both
    // drop the constant sum of f over the samples.
    lp.objective << (upper ? sx : -sx), (upper ? sy : -sy), (upper ? n : -n);
    Eigen::VectorXd row(3);
    for (const auto& [x, y] : pts) {
      row << x, y, 1.0;
      const double f = eval_bivariate(kind, x, y);
      if (upper)
        lp.add_ge(row, f);
      else
        lp.add_le(row, f);
    }
    const LpSolution sol = solve(lp);
    if (sol.status != LpStatus::Optimal)
      throw std::runtime_error("relax_distance: LP did not reach an optimum");
    PlaneCoeffs plane{sol.values(0), sol.values(1), sol.values(2)};
    if (upper)
      pair.upper = plane;
    else
      pair.lower = plane;
  }
  return soundness_offset(pair, region, kind, cfg.offset_grid);
}

namespace {

// Shared core of the volume and hybrid relaxations: constraints at the
// sample points of `region`, objective anchored on `anchor` (the region's
// bounding box). Variables are (A_u, B_u, C_u, A_l, B_l, C_l).
PlanePair relax_anchored(const Region2& region, const Box2& anchor, BivariateKind kind,
                         const RelaxConfig& cfg, bool hybrid) {
  const auto pts = sample_points(region, cfg.sample_density);
  LpProblem lp = LpProblem::with_vars(6);
  const double mx = anchor.mid_x(), my = anchor.mid_y();

  Eigen::VectorXd height(6);
  height << mx, my, 1.0, -mx, -my, -1.0;
  if (hybrid) {
    lp.objective = cfg.alpha * height;
  } else {
    // Scaling by the base area does not move the optimum; it makes the
    // reported objective the volume. Zero-area boxes keep the height.
    const double factor = anchor.area() > 0.0 ? anchor.area() : 1.0;
    lp.objective = factor * height;
  }

  Eigen::VectorXd row = Eigen::VectorXd::Zero(6);
  for (const auto& [x, y] : pts) {
    const double f = eval_bivariate(kind, x, y);
    row.setZero();
    row(0) = x;
    row(1) = y;
    row(2) = 1.0;
    lp.add_ge(row, f);  // upper plane above the surface
    row.setZero();
    row(3) = x;
    row(4) = y;
    row(5) = 1.0;
    lp.add_le(row, f);  // lower plane below the surface
  }

  if (hybrid) {
    // Corner deviations from the centroid value; the C coefficients cancel.
    std::vector<LinTerm> terms;
    terms.reserve(8);
    for (int side = 0; side < 2; ++side) {
      for (const auto& [cx, cy] : anchor.corners()) {
        LinTerm t;
        t.coeffs = Eigen::VectorXd::Zero(6);
        t.coeffs(side == 0 ? 0 : 3) = cx - mx;
        t.coeffs(side == 0 ? 1 : 4) = cy - my;
        terms.push_back(std::move(t));
      }
    }
    encode_abs_terms(lp, terms, Eigen::VectorXd::Constant(8, 1.0 - cfg.alpha));
  }

  const LpSolution sol = solve(lp);
  if (sol.status != LpStatus::Optimal)
    throw std::runtime_error("relax: plane LP did not reach an optimum");
  PlanePair pair;
  pair.upper = {sol.values(0), sol.values(1), sol.values(2)};
  pair.lower = {sol.values(3), sol.values(4), sol.values(5)};
  return soundness_offset(pair, region, kind, cfg.offset_grid);
}

}  // namespace

PlanePair relax_volume(const Box2& box, BivariateKind kind, const RelaxConfig& cfg) {
  if (box.is_point())
    throw std::invalid_argument("relax_volume: point box has no prism");
  return relax_anchored(box, box, kind, cfg, /*hybrid=*/false);
}

PlanePair relax_hybrid(const Box2& box, BivariateKind kind, const RelaxConfig& cfg) {
  if (box.is_point())
    throw std::invalid_argument("relax_hybrid: point box has no prism");
  return relax_anchored(box, box, kind, cfg, /*hybrid=*/true);
}

PlanePair relax(const Box2& box, BivariateKind kind, const RelaxConfig& cfg) {
  if (box.is_point()) {
    const double f = eval_bivariate(kind, box.lx, box.ly);
    return {{0.0, 0.0, f}, {0.0, 0.0, f}};
  }
  switch (cfg.method) {
    case RelaxMethod::Distance: return relax_distance(box, kind, cfg);
    case RelaxMethod::Volume: return relax_volume(box, kind, cfg);
    default: return relax_hybrid(box, kind, cfg);
  }
}

PlanePair relax_region(const Region2& region, BivariateKind kind, const RelaxConfig& cfg) {
  if (region.is_rectangle()) return relax(region.rectangle(), kind, cfg);
  if (cfg.method == RelaxMethod::Distance) return relax_distance(region, kind, cfg);
  return relax_anchored(region, region.bounding_box(), kind, cfg,
                        cfg.method == RelaxMethod::Hybrid);
}

PlaneCoeffs offset_upper(const PlaneCoeffs& plane, const Region2& region, BivariateKind kind,
                         int grid_n) {
  const Box2 bb = region.bounding_box();
  if (bb.width() == 0.0 && bb.height() == 0.0) {
    const double gap = eval_bivariate(kind, bb.lx, bb.ly) - plane.eval(bb.lx, bb.ly);
    PlaneCoeffs out = plane;
    if (gap > 0.0) out.c += gap;
    return out;
  }
  const OffsetGrid grid = offset_points(region, grid_n);
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& [x, y] : grid.points)
    worst = std::max(worst, eval_bivariate(kind, x, y) - plane.eval(x, y));
  Range dx, dy;
  partial_ranges(kind, bb, &dx, &dy);
  const double delta = worst + slope_gap(dx, plane.a) * grid.rx +
                       slope_gap(dy, plane.b) * grid.ry + kOffsetSafety;
  PlaneCoeffs out = plane;
  if (delta > 0.0) out.c += delta;
  return out;
}

PlaneCoeffs offset_lower(const PlaneCoeffs& plane, const Region2& region, BivariateKind kind,
                         int grid_n) {
  const Box2 bb = region.bounding_box();
  if (bb.width() == 0.0 && bb.height() == 0.0) {
    const double gap = plane.eval(bb.lx, bb.ly) - eval_bivariate(kind, bb.lx, bb.ly);
    PlaneCoeffs out = plane;
    if (gap > 0.0) out.c -= gap;
    return out;
  }
  const OffsetGrid grid = offset_points(region, grid_n);
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& [x, y] : grid.points)
    worst = std::max(worst, plane.eval(x, y) - eval_bivariate(kind, x, y));
  Range dx, dy;
  partial_ranges(kind, bb, &dx, &dy);
  const double delta = worst + slope_gap(dx, plane.a) * grid.rx +
                       slope_gap(dy, plane.b) * grid.ry + kOffsetSafety;
  PlaneCoeffs out = plane;
  if (delta > 0.0) out.c -= delta;
  return out;
}

PlanePair soundness_offset(const PlanePair& pair, const Region2& region, BivariateKind kind,
                           int grid_n) {
  return {offset_lower(pair.lower, region, kind, grid_n),
          offset_upper(pair.upper, region, kind, grid_n)};
}

double centroid_height(const PlanePair& pair, const Box2& box) {
  const double mx = box.mid_x(), my = box.mid_y();
  return pair.upper.eval(mx, my) - pair.lower.eval(mx, my);
}

double prism_volume(const PlanePair& pair, const Box2& box) {
  return box.area() * centroid_height(pair, box);
}

double surface_proxy(const PlanePair& pair, const Box2& box) {
  const double mx = box.mid_x(), my = box.mid_y();
  const double zu = pair.upper.eval(mx, my);
  const double zl = pair.lower.eval(mx, my);
  double sum = 0.0;
  for (const auto& [x, y] : box.corners()) {
    sum += std::abs(pair.upper.eval(x, y) - zu);
    sum += std::abs(pair.lower.eval(x, y) - zl);
  }
  return sum;
}

}  // namespace lstmcert
