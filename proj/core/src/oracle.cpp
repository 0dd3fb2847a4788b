#include "lstmcert/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lstmcert/rng.hpp"

namespace lstmcert {

namespace {

double tetra_volume(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c,
                    const Eigen::Vector3d& d) {
  return (b - a).cross(c - a).dot(d - a) / 6.0;
}

// Volume of the vertical truncated prism over triangle (p0, p1, p2) with top
// heights (z0, z1, z2): three tetrahedra.
double truncated_triangle_volume(const Eigen::Vector2d& p0, const Eigen::Vector2d& p1,
                                 const Eigen::Vector2d& p2, double z0, double z1, double z2) {
  const Eigen::Vector3d b0(p0.x(), p0.y(), 0.0), b1(p1.x(), p1.y(), 0.0), b2(p2.x(), p2.y(), 0.0);
  const Eigen::Vector3d t0(p0.x(), p0.y(), z0), t1(p1.x(), p1.y(), z1), t2(p2.x(), p2.y(), z2);
  double v = 0.0;
  v += tetra_volume(b0, b1, b2, t0);
  v += tetra_volume(b1, b2, t0, t1);
  v += tetra_volume(b2, t0, t1, t2);
  return std::abs(v);
}

// Solves a.x = b for n <= 8 by Gaussian elimination with partial pivoting.
// Returns false when the system is singular.
bool solve_small(int n, double a[8][8], double b[8], double x[8]) {
  int perm[8];
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::abs(a[col][col]);
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > best) {
        best = std::abs(a[r][col]);
        piv = r;
      }
    }
    if (best < 1e-11) return false;
    if (piv != col) {
      for (int c = 0; c < n; ++c) std::swap(a[col][c], a[piv][c]);
      std::swap(b[col], b[piv]);
      std::swap(perm[col], perm[piv]);
    }
    for (int r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  return true;
}

}  // namespace

double polygon_area(const std::vector<Eigen::Vector2d>& poly) {
  double twice = 0.0;
  const int n = static_cast<int>(poly.size());
  for (int i = 0; i < n; ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % n];
    twice += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * twice;
}

PolyPrism PolyPrism::from_plane(const std::vector<Eigen::Vector2d>& base,
                                const PlaneCoeffs& top) {
  if (base.size() < 3) throw std::invalid_argument("PolyPrism: base needs >= 3 vertices");
  if (polygon_area(base) <= 0.0)
    throw std::invalid_argument("PolyPrism: base must be counterclockwise with positive area");
  PolyPrism prism;
  prism.base = base;
  prism.top = top;
  prism.heights.resize(base.size());
  double scale = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    prism.heights(static_cast<int>(i)) = top.eval(base[i].x(), base[i].y());
    scale = std::max(scale, std::abs(prism.heights(static_cast<int>(i))));
  }
  // Zero heights are allowed (the closed forms extend continuously to tops
  // touching the base plane); the tolerance absorbs evaluation roundoff.
  for (int i = 0; i < prism.heights.size(); ++i) {
    if (prism.heights(i) < -1e-9 * (1.0 + scale))
      throw std::invalid_argument("PolyPrism: heights must be nonnegative");
    prism.heights(i) = std::max(prism.heights(i), 0.0);
  }
  return prism;
}

PolyPrism random_prism(Rng& rng, int n) {
  // Random invertible affine image of a regular n-gon, counterclockwise.
  double m00, m01, m10, m11;
  do {
    m00 = rng.uniform(-1.5, 1.5);
    m01 = rng.uniform(-1.5, 1.5);
    m10 = rng.uniform(-1.5, 1.5);
    m11 = rng.uniform(-1.5, 1.5);
  } while (std::abs(m00 * m11 - m01 * m10) < 0.1);
  const double tx = rng.uniform(-2, 2), ty = rng.uniform(-2, 2);
  const double phase = rng.uniform(0.0, 2.0 * M_PI);
  const double r = rng.uniform(0.5, 2.0);

  std::vector<Eigen::Vector2d> base(n);
  for (int i = 0; i < n; ++i) {
    const double ang = phase + 2.0 * M_PI * i / n;
    const double px = r * std::cos(ang), py = r * std::sin(ang);
    base[i] = Eigen::Vector2d(m00 * px + m01 * py + tx, m10 * px + m11 * py + ty);
  }
  if (polygon_area(base) < 0.0) std::reverse(base.begin(), base.end());

  PlaneCoeffs top{rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), 0.0};
  double min_height = std::numeric_limits<double>::infinity();
  for (const auto& p : base) min_height = std::min(min_height, top.eval(p.x(), p.y()));
  top.c = rng.uniform(0.5, 3.0) - min_height;
  return PolyPrism::from_plane(base, top);
}

double poly_prism_volume_exact(const PolyPrism& prism) {
  const int n = prism.order();
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : prism.base) centroid += p;
  centroid /= static_cast<double>(n);
  const double zc = prism.top.eval(centroid.x(), centroid.y());
  double v = 0.0;
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    v += truncated_triangle_volume(prism.base[i], prism.base[j], centroid, prism.heights(i),
                                   prism.heights(j), zc);
  }
  return v;
}

double poly_prism_volume_formula(const PolyPrism& prism) {
  return prism.heights.mean() * polygon_area(prism.base);
}

double poly_prism_volume_mc(const PolyPrism& prism, int samples, std::uint64_t seed,
                            double* stderr_out) {
  Box2 bb{prism.base[0].x(), prism.base[0].x(), prism.base[0].y(), prism.base[0].y()};
  for (const auto& p : prism.base) {
    bb.lx = std::min(bb.lx, p.x());
    bb.ux = std::max(bb.ux, p.x());
    bb.ly = std::min(bb.ly, p.y());
    bb.uy = std::max(bb.uy, p.y());
  }
  const int n = prism.order();
  const auto inside = [&](double x, double y) {
    for (int i = 0; i < n; ++i) {
      const auto& p = prism.base[i];
      const auto& q = prism.base[(i + 1) % n];
      if ((q.x() - p.x()) * (y - p.y()) - (q.y() - p.y()) * (x - p.x()) < 0.0) return false;
    }
    return true;
  };
  Rng rng(seed);
  double sum = 0.0, sum2 = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double x = rng.uniform(bb.lx, bb.ux);
    const double y = rng.uniform(bb.ly, bb.uy);
    const double val = inside(x, y) ? prism.top.eval(x, y) : 0.0;
    sum += val;
    sum2 += val * val;
  }
  const double area = bb.area();
  const double mean = sum / samples;
  if (stderr_out != nullptr) {
    const double var = std::max(0.0, sum2 / samples - mean * mean);
    *stderr_out = area * std::sqrt(var / samples);
  }
  return area * mean;
}

CornerIdentities coplanar_corner_identities(const PlaneCoeffs& plane, const Box2& box) {
  const double z1 = plane.eval(box.lx, box.ly);
  const double z2 = plane.eval(box.ux, box.ly);
  const double z3 = plane.eval(box.lx, box.uy);
  const double z4 = plane.eval(box.ux, box.uy);
  const double z0 = plane.eval(box.mid_x(), box.mid_y());
  return {std::abs((z1 + z4) - (z2 + z3)), std::abs(0.25 * (z1 + z2 + z3 + z4) - z0)};
}

DegenerateTopCheck degenerate_top_check(double a, double b, double z2, double z3) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("degenerate_top_check: need a,b > 0");
  if (!(z2 >= z3) || z3 < 0.0)
    throw std::invalid_argument("degenerate_top_check: need z2 >= z3 >= 0");
  const double z1 = z2 + z3;  // coplanarity with the zero corner at (a, b)
  const double z0 = 0.25 * (z1 + z2 + z3 + 0.0);

  DegenerateTopCheck out;
  out.deviation_sum =
      std::abs(z1 - z0) + std::abs(z2 - z0) + std::abs(z3 - z0) + std::abs(0.0 - z0);
  out.expected_sum = 2.0 * z2;

  // Two-triangle Heron evaluation of the top face, split along the diagonal
  // through the zero corner. The bracket below is derived for exactly this
  // sum of radicals.
  const double ab2 = a * a * b * b;
  const double r1 = std::sqrt(ab2 + a * a * z2 * z2 + b * b * z3 * z3);
  const double r2 = std::sqrt(ab2 + a * a * z3 * z3 + b * b * z2 * z2);
  out.top_area = 0.5 * (r1 + r2);
  const double sqrt3 = std::sqrt(3.0);
  out.area_lower = a * b / sqrt3 + (a + b) * z2 / (2.0 * sqrt3);
  out.area_upper = a * b + std::sqrt(a * a + b * b) * z2;
  return out;
}

LpSolution lp_vertex_enumeration(const LpProblem& problem) {
  const int n = problem.num_vars();
  if (n > 8) throw std::invalid_argument("lp_vertex_enumeration: more than 8 variables");

  // Hyperplane pool: every constraint plus every finite bound. Equalities are
  // forced into every active set.
  struct Plane {
    Eigen::VectorXd row;
    double rhs;
  };
  std::vector<Plane> planes;
  std::vector<int> mandatory;
  for (const auto& c : problem.constraints) {
    if (c.sense == ConstraintSense::Eq) mandatory.push_back(static_cast<int>(planes.size()));
    planes.push_back({c.row, c.rhs});
  }
  for (int j = 0; j < n; ++j) {
    if (std::isfinite(problem.lower(j))) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
      row(j) = 1.0;
      planes.push_back({std::move(row), problem.lower(j)});
    }
    if (std::isfinite(problem.upper(j))) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
      row(j) = 1.0;
      planes.push_back({std::move(row), problem.upper(j)});
    }
  }
  const int m = static_cast<int>(planes.size());
  const int need = n - static_cast<int>(mandatory.size());
  if (need < 0) return {LpStatus::Infeasible, Eigen::VectorXd::Zero(n), 0.0};

  const auto feasible = [&](const Eigen::VectorXd& x) {
    constexpr double tol = 1e-7;
    for (const auto& c : problem.constraints) {
      const double scale = std::max(c.row.cwiseAbs().maxCoeff(), 1e-300);
      const double lhs = c.row.dot(x);
      switch (c.sense) {
        case ConstraintSense::Le:
          if (lhs - c.rhs > tol * scale) return false;
          break;
        case ConstraintSense::Ge:
          if (c.rhs - lhs > tol * scale) return false;
          break;
        case ConstraintSense::Eq:
          if (std::abs(lhs - c.rhs) > tol * scale) return false;
          break;
      }
    }
    for (int j = 0; j < n; ++j) {
      if (std::isfinite(problem.lower(j)) && x(j) < problem.lower(j) - 1e-7) return false;
      if (std::isfinite(problem.upper(j)) && x(j) > problem.upper(j) + 1e-7) return false;
    }
    return true;
  };

  bool found = false;
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x = Eigen::VectorXd::Zero(n);

  std::vector<char> is_mandatory(m, 0);
  for (int idx : mandatory) is_mandatory[idx] = 1;

  const auto try_active_set = [&](const std::vector<int>& active) {
    double a[8][8], b[8], x[8];
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) a[r][c] = planes[active[r]].row(c);
      b[r] = planes[active[r]].rhs;
    }
    if (!solve_small(n, a, b, x)) return;
    Eigen::VectorXd point(n);
    for (int j = 0; j < n; ++j) point(j) = x[j];
    if (!feasible(point)) return;
    const double obj = problem.objective.dot(point);
    if (!found || obj < best) {
      found = true;
      best = obj;
      best_x = point;
    }
  };

  // Lexicographic combinations of `need` non-mandatory planes.
  std::vector<int> free_planes;
  for (int i = 0; i < m; ++i) {
    if (!is_mandatory[i]) free_planes.push_back(i);
  }
  if (need > static_cast<int>(free_planes.size())) {
    return {LpStatus::Infeasible, Eigen::VectorXd::Zero(n), 0.0};
  }
  std::vector<int> active(mandatory);
  active.resize(n);
  std::vector<int> comb(need);
  for (int i = 0; i < need; ++i) comb[i] = i;
  for (;;) {
    for (int i = 0; i < need; ++i)
      active[mandatory.size() + i] = free_planes[comb[i]];
    try_active_set(active);
    int i = need - 1;
    while (i >= 0 && comb[i] == static_cast<int>(free_planes.size()) - need + i) --i;
    if (i < 0) break;
    ++comb[i];
    for (int k = i + 1; k < need; ++k) comb[k] = comb[k - 1] + 1;
  }

  // Ray check: re-enumerate with a huge synthetic box on the unbounded
  // variables. A nonempty region without an original vertex, or an optimum
  // that strictly improves on that box, witnesses a recession direction.
  bool any_free = false;
  for (int j = 0; j < n; ++j) {
    if (!std::isfinite(problem.lower(j)) || !std::isfinite(problem.upper(j))) any_free = true;
  }
  if (any_free) {
    constexpr double big = 1e9;
    LpProblem boxed = problem;
    for (int j = 0; j < n; ++j) {
      if (!std::isfinite(boxed.lower(j))) boxed.lower(j) = -big;
      if (!std::isfinite(boxed.upper(j))) boxed.upper(j) = big;
    }
    const LpSolution inner = lp_vertex_enumeration(boxed);
    if (inner.status == LpStatus::Optimal) {
      if (!found || inner.objective_value < best - 1e-6 * (1.0 + std::abs(best))) {
        return {LpStatus::Unbounded, Eigen::VectorXd::Zero(n), 0.0};
      }
    }
  }
  if (!found) return {LpStatus::Infeasible, Eigen::VectorXd::Zero(n), 0.0};

  return {LpStatus::Optimal, best_x, best};
}

std::optional<std::vector<Eigen::VectorXd>> grid_attack(const LstmNetwork& net,
                                                        const Sample& sample,
                                                        const PerturbationSpec& spec,
                                                        int num_samples, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Eigen::VectorXd> candidate = sample.sequence;
  for (int s = 0; s < num_samples; ++s) {
    for (std::size_t t = 0; t < sample.sequence.size(); ++t) {
      const Eigen::VectorXd& base = sample.sequence[t];
      Eigen::VectorXd& frame = candidate[t];
      for (Eigen::Index i = 0; i < base.size(); ++i) {
        // Corner-biased: half the coordinates snap to +-epsilon.
        double v;
        if (rng.coin()) {
          v = base(i) + (rng.coin() ? spec.epsilon : -spec.epsilon);
        } else {
          v = base(i) + rng.uniform(-spec.epsilon, spec.epsilon);
        }
        if (spec.clip_range) v = std::clamp(v, spec.clip_range->first, spec.clip_range->second);
        frame(i) = v;
      }
    }
    if (predict(net, candidate) != sample.label) return candidate;
  }
  return std::nullopt;
}

int dense_grid_soundness(const PlanePair& pair, const Region2& region, BivariateKind kind,
                         int grid_n) {
  if (grid_n < 2) throw std::invalid_argument("dense_grid_soundness: grid_n must be >= 2");
  const Box2 bb = region.bounding_box();
  const int nx = bb.width() > 0 ? grid_n : 1;
  const int ny = bb.height() > 0 ? grid_n : 1;
  const auto coord = [](double lo, double hi, int i, int n) {
    if (n == 1 || i == 0) return lo;
    if (i == n - 1) return hi;
    return lo + (hi - lo) * i / (n - 1);
  };
  int violations = 0;
  for (int i = 0; i < nx; ++i) {
    const double x = coord(bb.lx, bb.ux, i, nx);
    for (int j = 0; j < ny; ++j) {
      const double y = coord(bb.ly, bb.uy, j, ny);
      if (!region.contains(x, y)) continue;
      const double f = eval_bivariate(kind, x, y);
      if (pair.lower.eval(x, y) > f) ++violations;
      if (pair.upper.eval(x, y) < f) ++violations;
    }
  }
  return violations;
}

}  // namespace lstmcert
