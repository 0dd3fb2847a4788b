#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "lstmcert/dataset.hpp"
#include "lstmcert/lp.hpp"
#include "lstmcert/model.hpp"
#include "lstmcert/relax.hpp"
#include "lstmcert/rng.hpp"
#include "lstmcert/verifier.hpp"

namespace lstmcert {

// Solid between z = 0 over a convex base polygon and a top plane with all
// heights positive; the reference object for the volume identities.
struct PolyPrism {
  std::vector<Eigen::Vector2d> base;  // convex, counterclockwise
  Eigen::VectorXd heights;            // z_i >= 0, coplanar by construction
  PlaneCoeffs top;

  static PolyPrism from_plane(const std::vector<Eigen::Vector2d>& base, const PlaneCoeffs& top);
  int order() const { return static_cast<int>(base.size()); }
};

double polygon_area(const std::vector<Eigen::Vector2d>& poly);

// Seeded prism over an affine image of a regular n-gon. On this family the
// vertex centroid coincides with the area centroid, which is exactly the
// condition under which the mean-height identity holds; irregular convex
// bases do not satisfy it.
PolyPrism random_prism(Rng& rng, int n);

// Exact volume: fans the base around its centroid into triangles, splits each
// truncated triangular prism into three tetrahedra and sums signed volumes.
double poly_prism_volume_exact(const PolyPrism& prism);

// Closed-form mean-height volume, the identity under test.
double poly_prism_volume_formula(const PolyPrism& prism);

// Monte-Carlo cross check; writes the standard error estimate if requested.
double poly_prism_volume_mc(const PolyPrism& prism, int samples, std::uint64_t seed,
                            double* stderr_out = nullptr);

// Affine-plane corner identities over a box: opposite corner sums agree and
// the corner mean equals the centroid value.
struct CornerIdentities {
  double opposite_gap = 0.0;  // |z1 + z4 - (z2 + z3)|
  double centroid_gap = 0.0;  // |mean(corners) - center|
};
CornerIdentities coplanar_corner_identities(const PlaneCoeffs& plane, const Box2& box);

// Degenerate coplanar top (smallest corner pinned to zero): checks the
// corner-deviation sum against 2*z2 and the exact top-face area against the
// closed-form bracket. Requires a, b > 0 and z2 >= z3 >= 0.
struct DegenerateTopCheck {
  double deviation_sum = 0.0;
  double expected_sum = 0.0;  // 2 * z2
  double top_area = 0.0;
  double area_lower = 0.0;
  double area_upper = 0.0;
};
DegenerateTopCheck degenerate_top_check(double a, double b, double z2, double z3);

// Enumerates basic points from constraint-subset intersections, keeps the
// feasible ones, and returns the best objective. Independent of the simplex
// path. Caps at 8 variables.
LpSolution lp_vertex_enumeration(const LpProblem& problem);

// Corner-biased sampling attack inside the L-infinity ball; returns the first
// perturbed sequence whose argmax differs from the sample's label.
std::optional<std::vector<Eigen::VectorXd>> grid_attack(const LstmNetwork& net,
                                                        const Sample& sample,
                                                        const PerturbationSpec& spec,
                                                        int num_samples, std::uint64_t seed);

// Counts strict violations of lower <= f <= upper over a grid_n x grid_n
// lattice on the region (triangles use in-region lattice points).
int dense_grid_soundness(const PlanePair& pair, const Region2& region, BivariateKind kind,
                         int grid_n);

}  // namespace lstmcert
