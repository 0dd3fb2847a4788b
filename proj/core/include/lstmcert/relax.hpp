#pragma once

#include <Eigen/Dense>
#include <array>
#include <utility>
#include <variant>
#include <vector>

namespace lstmcert {

// The two bivariate surfaces an LSTM cell produces: sigmoid(x)*tanh(y) for
// the input and output gates, sigmoid(x)*y for the forget gate acting on the
// previous cell value.
enum class BivariateKind { SigTanh, SigMul };

enum class RelaxMethod { Distance, Volume, Hybrid };

struct RelaxConfig {
  double alpha = 0.674;     // weight of the height term in the hybrid objective
  int sample_density = 10;  // LP constraint grid, points per axis
  int offset_grid = 64;     // soundness-offset grid, points per axis
  RelaxMethod method = RelaxMethod::Hybrid;
};

struct Box2 {
  double lx = 0, ux = 0, ly = 0, uy = 0;

  double width() const { return ux - lx; }
  double height() const { return uy - ly; }
  double area() const { return width() * height(); }
  bool is_point() const { return ux == lx && uy == ly; }
  double mid_x() const { return 0.5 * (lx + ux); }
  double mid_y() const { return 0.5 * (ly + uy); }
  // (lx,ly), (ux,ly), (lx,uy), (ux,uy)
  std::array<std::pair<double, double>, 4> corners() const;
};

struct Triangle2 {
  std::array<Eigen::Vector2d, 3> v;
  double area() const;
};

class Region2 {
 public:
  Region2(const Box2& box) : shape_(box) {}         // NOLINT(runtime/explicit)
  Region2(const Triangle2& tri);                    // NOLINT(runtime/explicit)

  bool is_rectangle() const { return std::holds_alternative<Box2>(shape_); }
  const Box2& rectangle() const { return std::get<Box2>(shape_); }
  const Triangle2& triangle() const { return std::get<Triangle2>(shape_); }
  Box2 bounding_box() const;
  double area() const;
  // Membership with an outward slack: accepts points whose signed distance to
  // every edge is >= -slack (exact for rectangles).
  bool contains(double x, double y, double slack = 0.0) const;

 private:
  std::variant<Box2, Triangle2> shape_;
};

struct PlaneCoeffs {
  double a = 0, b = 0, c = 0;
  double eval(double x, double y) const { return a * x + b * y + c; }
};

// Lower/upper bounding planes of a bivariate surface over a region. After
// soundness_offset, lower <= f <= upper holds at every point of the region.
struct PlanePair {
  PlaneCoeffs lower;
  PlaneCoeffs upper;
};

double sigmoid(double x);
double eval_bivariate(BivariateKind kind, double x, double y);

// Rectangle: density x density grid including all corners.
// Triangle: barycentric lattice of the same order including all vertices.
std::vector<std::pair<double, double>> sample_points(const Region2& region, int density);

// The two independent LPs minimizing the summed vertical distance between the
// surface and each plane at the sampled points; offset-corrected.
PlanePair relax_distance(const Region2& region, BivariateKind kind, const RelaxConfig& cfg);

// Single LP minimizing the prism volume (base area times centroid height),
// falling back to the centroid height alone when the base area is zero;
// offset-corrected. Rejects point boxes.
PlanePair relax_volume(const Box2& box, BivariateKind kind, const RelaxConfig& cfg);

// Single LP minimizing alpha * height + (1 - alpha) * sum of absolute corner
// deviations from the centroid values; offset-corrected. Rejects point boxes.
PlanePair relax_hybrid(const Box2& box, BivariateKind kind, const RelaxConfig& cfg);

// Dispatch on cfg.method; point boxes collapse to exact constant planes.
PlanePair relax(const Box2& box, BivariateKind kind, const RelaxConfig& cfg);

// Region dispatch on cfg.method. For triangles the volume/hybrid objectives
// are anchored on the bounding box while constraints stay on the triangle's
// sample lattice.
PlanePair relax_region(const Region2& region, BivariateKind kind, const RelaxConfig& cfg);

// Certified post-correction: raises the upper plane / lowers the lower plane
// by a grid maximum plus a Lipschitz margin so the pair bounds the surface at
// every point of the region, not just at sampled points.
PlanePair soundness_offset(const PlanePair& pair, const Region2& region, BivariateKind kind,
                           int grid_n);
PlaneCoeffs offset_lower(const PlaneCoeffs& plane, const Region2& region, BivariateKind kind,
                         int grid_n);
PlaneCoeffs offset_upper(const PlaneCoeffs& plane, const Region2& region, BivariateKind kind,
                         int grid_n);

// Signed volume of the truncated prism between the planes (negative if they
// cross): base area times centroid height.
double prism_volume(const PlanePair& pair, const Box2& box);

// Corner-deviation sum of both planes around their centroid values.
double surface_proxy(const PlanePair& pair, const Box2& box);

// Upper minus lower plane, evaluated at the box midpoint. Signed.
double centroid_height(const PlanePair& pair, const Box2& box);

}  // namespace lstmcert
